/** Explorer session state: slider values, request scheduling, ordering.
 *
 * All numerical truth comes from the service; this module only maps sliders
 * to coefficient vectors, rate-limits /eval requests, and guarantees that a
 * stale (out-of-order) response is never rendered. DOM-free by design.
 */

import type { EvalRequest, EvalResponse, Meta, Transport } from "./api.js";

export const SHAPE_SLIDERS = 10;
export const TEX_SLIDERS = 5;
/** Rate cap on /eval requests: at most one per this many milliseconds. */
export const MIN_EVAL_INTERVAL_MS = 100;
/** Slider u in [-1, 1] maps to coefficient u * SIGMA_RANGE * sigma. */
export const SIGMA_RANGE = 3;

const clamp = (v: number, lo: number, hi: number) => Math.min(Math.max(v, lo), hi);

export class Session {
  meta: Meta | null = null;
  /** slider positions in [-1, 1], one per exposed shape component */
  shapeSliders: number[] = [];
  /** full pose vector in radians (3 per joint) */
  theta: number[] = [];
  /** slider positions in [-1, 1], one per exposed texture component */
  texSliders: number[] = [];
  selectedJoint = 0;
  lastResponse: EvalResponse | null = null;
  requestInFlight = false;

  onRender: ((resp: EvalResponse) => void) | null = null;
  onError: ((err: unknown) => void) | null = null;

  private requestCounter = 0;
  private lastRenderedId = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastSendAt = Number.NEGATIVE_INFINITY;

  constructor(private readonly transport: Transport) {}

  async connect(): Promise<Meta> {
    this.meta = await this.transport.getMeta();
    this.shapeSliders = new Array(Math.min(SHAPE_SLIDERS, this.meta.shape_dim)).fill(0);
    this.texSliders = new Array(Math.min(TEX_SLIDERS, this.meta.tex_dim)).fill(0);
    this.theta = new Array(this.meta.pose_dim).fill(0);
    return this.meta;
  }

  /** Coefficients at the current slider positions: beta_i = u_i * 3 sigma_i. */
  currentRequest(): EvalRequest {
    if (!this.meta) {
      throw new Error("not connected");
    }
    const beta = new Array(this.meta.shape_dim).fill(0);
    this.shapeSliders.forEach((u, i) => {
      beta[i] = u * SIGMA_RANGE * this.meta!.sigma_shape[i];
    });
    const tex = new Array(this.meta.tex_dim).fill(0);
    this.texSliders.forEach((u, i) => {
      tex[i] = u * SIGMA_RANGE * this.meta!.sigma_tex[i];
    });
    return { beta, theta: [...this.theta], tex };
  }

  setShapeSlider(index: number, value: number): void {
    this.shapeSliders[index] = clamp(value, -1, 1);
    this.scheduleEval();
  }

  setTexSlider(index: number, value: number): void {
    this.texSliders[index] = clamp(value, -1, 1);
    this.scheduleEval();
  }

  setJointAngle(joint: number, axis: number, radians: number): void {
    this.theta[3 * joint + axis] = clamp(radians, -Math.PI, Math.PI);
    this.scheduleEval();
  }

  resetPose(): void {
    this.theta.fill(0);
    this.scheduleEval();
  }

  /** Trailing-edge debounce under the MIN_EVAL_INTERVAL_MS rate cap; the
   * request body is read at fire time, so the last slider value wins. */
  scheduleEval(): void {
    if (this.timer !== null) {
      return;
    }
    const wait = Math.max(0, MIN_EVAL_INTERVAL_MS - (Date.now() - this.lastSendAt));
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.sendEval();
    }, wait);
  }

  private async sendEval(): Promise<void> {
    this.lastSendAt = Date.now();
    const id = ++this.requestCounter;
    this.requestInFlight = true;
    try {
      const resp = await this.transport.postEval(this.currentRequest());
      // responses may complete out of order; only ever move forward
      if (id > this.lastRenderedId) {
        this.lastRenderedId = id;
        this.lastResponse = resp;
        this.onRender?.(resp);
      }
    } catch (err) {
      this.onError?.(err);
    } finally {
      if (id === this.requestCounter) {
        this.requestInFlight = false;
      }
    }
  }
}
