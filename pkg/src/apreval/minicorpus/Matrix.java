public class Matrix {
    public float determinant(float a, float b, float c, float d) {
        float left = a * d; // @viol:S2164:Bug:Low math on floats @stubborn
        float right = b * c; // @viol:S2164:Bug:Low math on floats @stubborn
        return left - right;
    }

    public float trace(float a, float d) {
        return a + d;
    }
}
