/** Threshold slider state machine: the displayed value is always the last
 * service-acknowledged one; a pending value shows only while a PUT is in
 * flight, and a rejection reverts with a message. */

export interface ThresholdTransport {
  putThreshold(value: number): Promise<number>; // resolves with acked value
}

export type ThresholdListener = (state: ThresholdState) => void;

export interface ThresholdState {
  current: number;
  pending: number | null;
  message: string | null;
}

export class ThresholdControl {
  private current: number;
  private pending: number | null = null;
  private message: string | null = null;
  private epoch = 0;

  constructor(
    private transport: ThresholdTransport,
    initial: number,
    private listener: ThresholdListener = () => {},
  ) {
    this.current = initial;
  }

  state(): ThresholdState {
    return { current: this.current, pending: this.pending, message: this.message };
  }

  /** Issue an adjustment; the promise resolves once acked or reverted. */
  async adjust(value: number): Promise<ThresholdState> {
    const epoch = ++this.epoch;
    this.pending = value;
    this.message = null;
    this.notify();
    try {
      const acked = await this.transport.putThreshold(value);
      if (epoch === this.epoch) {
        this.current = acked;
        this.pending = null;
      }
    } catch (err) {
      if (epoch === this.epoch) {
        this.pending = null;
        this.message = `rejected: ${err instanceof Error ? err.message : String(err)}`;
      }
    }
    this.notify();
    return this.state();
  }

  /** The stream's threshold events also confirm the effective value. */
  observeStreamThreshold(value: number): void {
    if (this.pending === null) {
      this.current = value;
      this.notify();
    }
  }

  private notify(): void {
    this.listener(this.state());
  }
}
