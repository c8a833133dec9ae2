// Consensus review: show both annotators' labels for every fine-level
// disagreement, post resolution records through the dedicated "consensus"
// session, and display the raw and binary agreement rates. When the two
// streams are incomplete the view is blocked with the missing-item list.

import { Client } from "./api.js";
import type { AnnotationRow, DisagreementRow, FinalRow, PacketExport } from "./api.js";
import type { Decision, Subtype } from "./schema.js";

export const CONSENSUS_SESSION = "consensus";

export interface ConsensusState {
  blocked: boolean;
  missing: string[];
  queue: DisagreementRow[];
  agreement: { raw: number; binary: number } | null;
  finals: FinalRow[];
}

export class ConsensusReview {
  private state: ConsensusState = {
    blocked: true,
    missing: [],
    queue: [],
    agreement: null,
    finals: [],
  };

  constructor(
    private readonly client: Client,
    private readonly packetId: string,
  ) {}

  current(): ConsensusState {
    return { ...this.state, queue: [...this.state.queue] };
  }

  async load(): Promise<ConsensusState> {
    const data = await this.client.packetExport(this.packetId);
    const missing = missingItems(data);
    if (missing.length > 0 || !data.agreement) {
      this.state = {
        blocked: true,
        missing,
        queue: [],
        agreement: null,
        finals: [],
      };
    } else {
      this.state = {
        blocked: false,
        missing: [],
        queue: data.disagreements ?? [],
        agreement: data.agreement,
        finals: data.finals ?? [],
      };
    }
    return this.current();
  }

  async resolve(itemId: string, decision: Decision, subtype?: Subtype): Promise<ConsensusState> {
    await this.client.submitLabel(CONSENSUS_SESSION, itemId, decision, subtype);
    return this.load();
  }
}

// Items present in one primary stream but not the other; the consensus session
// itself is not a primary stream.
export function missingItems(data: PacketExport): string[] {
  const sessions = Object.keys(data.annotations)
    .filter((s) => s !== CONSENSUS_SESSION)
    .sort();
  if (sessions.length !== 2) return [];
  const [a, b] = sessions.map(
    (s) => new Set(data.annotations[s].map((row) => row.item_id)),
  );
  const missing: string[] = [];
  for (const id of a) if (!b.has(id)) missing.push(id);
  for (const id of b) if (!a.has(id)) missing.push(id);
  return missing.sort();
}

// Independent recomputation of the two agreement rates from raw annotation
// rows; the UI cross-checks the server's numbers with this.
export function agreementRates(
  a: AnnotationRow[],
  b: AnnotationRow[],
): { raw: number; binary: number } {
  const byId = new Map(a.map((row) => [row.item_id, row]));
  let fine = 0;
  let binary = 0;
  let n = 0;
  for (const rowB of b) {
    const rowA = byId.get(rowB.item_id);
    if (!rowA) continue;
    n += 1;
    const sameFine =
      rowA.decision === rowB.decision &&
      (rowA.subtype ?? null) === (rowB.subtype ?? null);
    const sameBinary =
      (rowA.decision === "truly_insufficient") ===
      (rowB.decision === "truly_insufficient");
    if (sameFine) fine += 1;
    if (sameBinary) binary += 1;
  }
  return n === 0 ? { raw: 1, binary: 1 } : { raw: fine / n, binary: binary / n };
}
