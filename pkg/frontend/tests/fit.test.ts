import { describe, expect, it } from "vitest";

import { fitConvergenceOrder, leastSquaresSlope } from "../src/fit.js";

describe("leastSquaresSlope", () => {
  it("recovers an exact linear relation", () => {
    const x = [0, 1, 2, 3, 4];
    const y = x.map((v) => 2.5 * v - 1.0);
    expect(leastSquaresSlope(x, y)).toBeCloseTo(2.5, 12);
  });

  it("rejects degenerate input", () => {
    expect(() => leastSquaresSlope([1], [2])).toThrow();
    expect(() => leastSquaresSlope([1, 1], [2, 3])).toThrow();
  });
});

describe("fitConvergenceOrder", () => {
  it("recovers the order of a synthetic e = C h^3 sequence", () => {
    const cells = [32, 128, 512, 2048];
    const errors = cells.map((c) => 7.0 * Math.pow(c, -1.5)); // h^3 = c^-3/2
    expect(fitConvergenceOrder(cells, errors)).toBeCloseTo(3.0, 10);
  });
});
