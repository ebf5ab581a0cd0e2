import { describe, expect, it } from "vitest";

import { LatestWins } from "../src/latest.js";

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("LatestWins", () => {
  it("discards a stale response that resolves after a newer request", async () => {
    const gate = new LatestWins();
    const first = deferred<string>();
    const second = deferred<string>();
    const p1 = gate.run(() => first.promise);
    const p2 = gate.run(() => second.promise);
    second.resolve("new");
    first.resolve("old");
    expect(await p1).toBeUndefined();
    expect(await p2).toBe("new");
  });

  it("keeps the newest of many interleaved requests", async () => {
    const gate = new LatestWins();
    const slots = [deferred<number>(), deferred<number>(), deferred<number>()];
    const runs = slots.map((d) => gate.run(() => d.promise));
    slots[1].resolve(1);
    slots[2].resolve(2);
    slots[0].resolve(0);
    expect(await Promise.all(runs)).toEqual([undefined, undefined, 2]);
  });

  it("resolves idle only after every in-flight run settles", async () => {
    const gate = new LatestWins();
    const d = deferred<number>();
    const run = gate.run(() => d.promise);
    let idleDone = false;
    const idle = gate.idle().then(() => {
      idleDone = true;
    });
    await Promise.resolve();
    expect(idleDone).toBe(false);
    d.resolve(7);
    await run;
    await idle;
    expect(idleDone).toBe(true);
  });

  it("is idle immediately when nothing is in flight", async () => {
    await new LatestWins().idle();
  });

  it("propagates errors and still releases idle waiters", async () => {
    const gate = new LatestWins();
    const d = deferred<number>();
    const run = gate.run(() => d.promise);
    const idle = gate.idle();
    d.reject(new Error("boom"));
    await expect(run).rejects.toThrow("boom");
    await idle;
  });
});
