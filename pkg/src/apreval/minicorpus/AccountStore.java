import java.util.ArrayList;
import java.util.List;

public class AccountStore {
    public static int retryLimit = 3; // @viol:S1444:CodeSmell:Medium public static field should be constant

    public List<String> accounts() {
        List<String> names = new ArrayList<String>();
        int slot = names.size(); // @viol:S1481:CodeSmell:Low unused local variable @fragile
        names.add("root");
        return names;
    }
}
