import java.util.HashMap;
import java.util.Map;

public class Registry {
    private int cachedSize; // @viol:S1068:CodeSmell:Medium unused private field
    private String label; // @viol:S1068:CodeSmell:Medium unused private field
    private final Map<String, String> entries = new HashMap<String, String>();

    public void put(String key, String value) {
          entries.put(key, value); // @viol:S1120:CodeSmell:Low indentation off by two
    }

    public String get(String key) {
        return entries.get(key);
    }
}
