public class UtilityBox { // @viol:S1118:CodeSmell:Medium utility class has a public constructor
    public static int clamp(int value, int lo, int hi) {
        if (value < lo) {
            return lo;
        }
        return Math.min(value, hi);
    }

    public static String pad(String text, int width) {
        StringBuilder sb = new StringBuilder(text);
        while (sb.length() < width) {
            sb.append(' ');
        }
        return sb.toString(); // @viol:S139:CodeSmell:Low trailing comment on code line
    }
}
