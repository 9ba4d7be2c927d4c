public class LegacyParser { // @repair:delete-all
    public int parse(String raw) {
        int total = 0; // @viol:S1854:CodeSmell:Low useless assignment
        int unused = raw.length(); // @viol:S1481:CodeSmell:Low unused local variable
        total = raw.trim().length();
        return total;
    }
}
