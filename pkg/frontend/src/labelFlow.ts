// Session labeling flow. The server cursor is the single source of truth: the
// flow always advances by asking for the next unlabeled item, so a refresh or
// a lost race resumes exactly where the log says. Submission is optimistic -
// the UI moves on immediately; a conflict (someone already labeled the item in
// this session) surfaces a notice and keeps the advance, any other failure
// rolls back to the same item, which the server re-dispenses.

import { ApiError, Client, isDone } from "./api.js";
import type { BlindedItem } from "./api.js";
import { decisionForKey, needsSubtype, subtypeForKey } from "./schema.js";
import type { Decision, Subtype } from "./schema.js";

export type Phase = "idle" | "labeling" | "subtype" | "done" | "error";

export interface FlowState {
  phase: Phase;
  item: BlindedItem | null;
  pendingDecision: Decision | null;
  completed: number;
  total: number;
  notice: string | null;
}

export type FlowListener = (state: FlowState) => void;

export class LabelFlow {
  private state: FlowState = {
    phase: "idle",
    item: null,
    pendingDecision: null,
    completed: 0,
    total: 0,
    notice: null,
  };

  private listeners: FlowListener[] = [];

  constructor(
    private readonly client: Client,
    private readonly sessionId: string,
  ) {}

  current(): FlowState {
    return { ...this.state };
  }

  subscribe(listener: FlowListener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<FlowState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.current());
  }

  async start(): Promise<void> {
    await this.advance(null);
  }

  // A decision either submits immediately or opens the subtype prompt.
  async choose(decision: Decision): Promise<void> {
    if (this.state.phase !== "labeling" || !this.state.item) return;
    if (needsSubtype(decision)) {
      this.update({ phase: "subtype", pendingDecision: decision });
      return;
    }
    await this.submit(decision, undefined);
  }

  async chooseSubtype(subtype: Subtype): Promise<void> {
    const decision = this.state.pendingDecision;
    if (this.state.phase !== "subtype" || !decision) return;
    await this.submit(decision, subtype);
  }

  cancelSubtype(): void {
    if (this.state.phase === "subtype") {
      this.update({ phase: "labeling", pendingDecision: null });
    }
  }

  handleKey(key: string): Promise<void> | void {
    if (this.state.phase === "labeling") {
      const decision = decisionForKey(key);
      if (decision) return this.choose(decision);
    } else if (this.state.phase === "subtype") {
      if (key === "Escape") return this.cancelSubtype();
      const subtype = subtypeForKey(key);
      if (subtype) return this.chooseSubtype(subtype);
    }
  }

  private async submit(decision: Decision, subtype?: Subtype): Promise<void> {
    const item = this.state.item;
    if (!item) return;
    // optimistic: leave the labeling phase before the ack arrives
    this.update({ phase: "idle", pendingDecision: null, notice: null });
    let notice: string | null = null;
    try {
      const res = await this.client.submitLabel(
        this.sessionId,
        item.item_id,
        decision,
        subtype,
      );
      this.update({ completed: res.progress.completed, total: res.progress.total });
    } catch (err) {
      if (err instanceof ApiError && err.code === "conflict") {
        notice = "already labeled - moving on";
      } else if (err instanceof ApiError) {
        // rollback: the server did not accept the label, so /next will
        // re-dispense the same item
        notice = `rejected: ${err.message}`;
      } else {
        notice = "network error - item not saved";
      }
    }
    await this.advance(notice);
  }

  private async advance(notice: string | null): Promise<void> {
    try {
      const next = await this.client.nextItem(this.sessionId);
      if (isDone(next)) {
        this.update({
          phase: "done",
          item: null,
          completed: next.completed,
          total: next.total,
          notice,
        });
      } else {
        this.update({
          phase: "labeling",
          item: next,
          pendingDecision: null,
          completed: next.position,
          total: next.total,
          notice,
        });
      }
    } catch (err) {
      const detail = err instanceof Error ? err.message : String(err);
      this.update({ phase: "error", notice: `cannot reach session: ${detail}` });
    }
  }
}
