public final class Utils { // @viol:S1118:CodeSmell:Medium utility class has a public constructor @stubborn
    private static int counter; // @viol:S1068:CodeSmell:Medium unused private field

    public static String join(String left, String right) {
        return left + "-" + right; // @viol:S139:CodeSmell:Low trailing comment about joining
    }
}
