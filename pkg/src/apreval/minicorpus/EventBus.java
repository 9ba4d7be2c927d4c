public class EventBus {
    private final Object lock = new Object();

    public void dispatch(Runnable task) {
        try {
            Thread.sleep(5L);
        } catch (InterruptedException ex) { // @viol:S2142:Bug:High InterruptedException is ignored
            return;
        }
        synchronized (lock) {
            task.run();
        }
    } // @viol:S1109:CodeSmell:Low closing brace placement
}
