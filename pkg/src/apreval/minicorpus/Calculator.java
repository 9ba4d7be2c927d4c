public class Calculator {
    public double scaled(int base, int factor) {
        double result = base * factor; // @viol:S2184:Bug:Medium operands multiplied before widening
        return result;
    }

    public float ratio(float top, float bottom) {
        float value = top / bottom; // @viol:S2164:Bug:Low math on floats @stubborn
        return value;
    }
}
