/**
 * Latest-wins request gate: concurrent fetches for one view resolve so that
 * only the most recently issued call is applied; superseded responses are
 * discarded even when they arrive later.
 */

export class LatestWins {
  private seq = 0;
  private active = 0;
  private waiters: Array<() => void> = [];

  /** Run fn; resolve with its value only if no newer run was issued since. */
  async run<T>(fn: () => Promise<T>): Promise<T | undefined> {
    const token = ++this.seq;
    this.active += 1;
    try {
      const value = await fn();
      return token === this.seq ? value : undefined;
    } finally {
      this.active -= 1;
      if (this.active === 0) {
        for (const wake of this.waiters.splice(0)) wake();
      }
    }
  }

  /** Resolves once every in-flight run has settled. */
  idle(): Promise<void> {
    if (this.active === 0) return Promise.resolve();
    return new Promise((resolve) => this.waiters.push(resolve));
  }
}
