public class Pipeline {
    public int process(String payload) {
        int staged = payload.length(); // @viol:S1481:CodeSmell:Low unused local variable
        int checksum = 0;
        for (int i = 0; i < payload.length(); i++) {
            checksum += payload.charAt(i);
        }
        float seed = checksum * 0.5f; // @viol:S2164:Bug:Low math on floats @stubborn
        return checksum + (int) seed;
    }
}
