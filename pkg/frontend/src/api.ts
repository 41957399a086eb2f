/** Typed client for the model service HTTP API. */

export interface Meta {
  shape_dim: number;
  pose_dim: number;
  tex_dim: number;
  joint_names: string[];
  sigma_shape: number[];
  sigma_tex: number[];
  vertex_count: number;
  face_count: number;
}

export interface EvalRequest {
  beta?: number[];
  theta?: number[];
  tex?: number[];
}

export interface TexturePayload {
  w: number;
  h: number;
  rgb8_base64: string;
}

export interface EvalResponse {
  vertices: number[];
  faces: number[];
  uvs: number[];
  texture: TexturePayload;
}

export interface FitRequest {
  target_vertices?: number[][];
  target_joints?: number[][];
  config?: Record<string, unknown>;
}

/** Transport abstraction so session logic is testable against a mock. */
export interface Transport {
  getMeta(): Promise<Meta>;
  postEval(body: EvalRequest): Promise<EvalResponse>;
}

export class HttpTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) {
      throw new Error(`${path} failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  getMeta(): Promise<Meta> {
    return this.request<Meta>("/meta");
  }

  postEval(body: EvalRequest): Promise<EvalResponse> {
    return this.request<EvalResponse>("/eval", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
