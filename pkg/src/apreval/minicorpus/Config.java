import java.io.Serializable;
import java.util.Properties;

public class Config implements Serializable { // @viol:S2057:CodeSmell:Low serialVersionUID is missing
    private final Properties store = new Properties(); // @viol:S1948:CodeSmell:Medium non-serializable field in Serializable class @stubborn
    public static final String DEFAULT_PROFILE_NAME_FOR_ALL_DEPLOYMENT_TARGETS = "standard-profile-with-quite-a-long-name"; // @viol:S103:CodeSmell:Medium line is too long

    public String lookup(String key) {
        return store.getProperty(key, DEFAULT_PROFILE_NAME_FOR_ALL_DEPLOYMENT_TARGETS);
    }
}
