/** Least-squares slope of y against x. */
export function leastSquaresSlope(x: number[], y: number[]): number {
  if (x.length !== y.length || x.length < 2) {
    throw new Error("slope fit needs at least two matching points");
  }
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  if (den === 0) throw new Error("slope fit: degenerate abscissae");
  return num / den;
}

/**
 * Fitted convergence order: slope of log(error) against log(h), with
 * h = cells^(-1/2) for a 2D triangulation.
 */
export function fitConvergenceOrder(cells: number[], errors: number[]): number {
  const logH = cells.map((c) => -0.5 * Math.log(c));
  const logE = errors.map((e) => Math.log(e));
  return leastSquaresSlope(logH, logE);
}
