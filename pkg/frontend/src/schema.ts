// Label schema mirrored from the adjudication service. The wire key for a
// judgment is "decision"; the server owns validation, the UI only offers
// choices it will accept.

export const DECISIONS = [
  "truly_insufficient",
  "actually_supported",
  "actually_contradicted",
  "ambiguous",
  "invalid_or_unreadable",
] as const;

export type Decision = (typeof DECISIONS)[number];

export const SUBTYPES = [
  "broad_topic",
  "near_miss",
  "partial",
  "topic_unrelated",
] as const;

export type Subtype = (typeof SUBTYPES)[number];

export const DECISION_LABELS: Record<Decision, string> = {
  truly_insufficient: "Truly insufficient",
  actually_supported: "Actually supported",
  actually_contradicted: "Actually contradicted",
  ambiguous: "Ambiguous",
  invalid_or_unreadable: "Invalid / unreadable",
};

export const SUBTYPE_LABELS: Record<Subtype, string> = {
  broad_topic: "Broad topic",
  near_miss: "Near miss",
  partial: "Partial",
  topic_unrelated: "Topic unrelated",
};

// Keyboard shortcuts: 1-5 pick a decision; in the subtype prompt 1-4 pick the
// subtype. Only truly_insufficient opens the subtype prompt.
export function decisionForKey(key: string): Decision | undefined {
  const index = Number.parseInt(key, 10) - 1;
  return index >= 0 && index < DECISIONS.length ? DECISIONS[index] : undefined;
}

export function subtypeForKey(key: string): Subtype | undefined {
  const index = Number.parseInt(key, 10) - 1;
  return index >= 0 && index < SUBTYPES.length ? SUBTYPES[index] : undefined;
}

export function needsSubtype(decision: Decision): boolean {
  return decision === "truly_insufficient";
}
