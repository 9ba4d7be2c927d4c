import java.io.FileInputStream;
import java.io.InputStream;
import javax.xml.parsers.DocumentBuilderFactory;

public class Connector {
    public String firstByte(String path) throws Exception {
        InputStream stream = new FileInputStream(path); // @viol:S2095:Bug:High resource is never closed
        int first = stream.read();
        return String.valueOf(first);
    }

    public DocumentBuilderFactory parserFactory() {
        DocumentBuilderFactory factory = DocumentBuilderFactory.newInstance(); // @viol:S2755:Vulnerability:High XXE-prone parser configuration
        return factory;
    }

    public boolean isDefault(String name) {
        return name.equals("default"); // @viol:S1132:CodeSmell:Low string literal should be on the left side
    }
}
