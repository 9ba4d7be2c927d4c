public class Shapes { // @viol:S1118:CodeSmell:Medium utility holder with a public constructor
    public static double areaOfSquare(double side) {
        return side * side; // @failing-on-original geometry oracle disagrees on this platform
    }
}

class Circle extends Shapes {
    public double radius;

    public double area() {
        return 3.14159 * this.radius * this.radius;
    }
}
