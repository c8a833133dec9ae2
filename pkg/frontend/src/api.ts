// Typed client for the adjudication service. The four endpoints below are the
// entire server surface this app is allowed to touch.

import type { Decision, Subtype } from "./schema.js";

export interface BlindedItem {
  item_id: string;
  claim: string;
  evidence: string;
  position: number;
  total: number;
}

export interface DoneMarker {
  done: true;
  total: number;
  completed: number;
}

export type NextResponse = BlindedItem | DoneMarker;

export function isDone(res: NextResponse): res is DoneMarker {
  return (res as DoneMarker).done === true;
}

export interface Progress {
  completed: number;
  total: number;
}

export interface SubmitResponse {
  ok: boolean;
  progress: Progress;
}

export interface AnnotationRow {
  item_id: string;
  annotator_id: string;
  decision: string;
  subtype?: string;
  timestamp?: string;
}

export interface DisagreementRow {
  item_id: string;
  sides: Record<string, AnnotationRow>;
}

export interface FinalRow {
  item_id: string;
  decision: string;
  subtype: string | null;
  source: string;
}

export interface PacketExport {
  packet_id: string;
  annotations: Record<string, AnnotationRow[]>;
  disagreements?: DisagreementRow[];
  agreement?: { raw: number; binary: number };
  finals?: FinalRow[];
}

export interface PacketProgress {
  packet_id: string;
  total: number;
  sessions: { session_id: string; completed: number }[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const code = (body as { code?: string }).code ?? "error";
    const detail = (body as { detail?: string }).detail ?? response.statusText;
    throw new ApiError(response.status, code, detail);
  }
  return body as T;
}

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  nextItem(sessionId: string): Promise<NextResponse> {
    return this.request(`/session/${encodeURIComponent(sessionId)}/next`);
  }

  submitLabel(
    sessionId: string,
    itemId: string,
    decision: Decision,
    subtype?: Subtype,
  ): Promise<SubmitResponse> {
    const body: Record<string, string> = { item_id: itemId, decision };
    if (subtype) body.subtype = subtype;
    return this.request(`/session/${encodeURIComponent(sessionId)}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  packetProgress(packetId: string): Promise<PacketProgress> {
    return this.request(`/packet/${encodeURIComponent(packetId)}/progress`);
  }

  packetExport(packetId: string): Promise<PacketExport> {
    return this.request(`/packet/${encodeURIComponent(packetId)}/export`);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    return asJson<T>(response);
  }
}
