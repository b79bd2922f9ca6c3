/**
 * Annotation drafts: the in-progress five pairs for a leased paragraph.
 *
 * Drafts live in localStorage keyed by lease id so a reload mid-task
 * loses nothing; a draft whose lease has expired is dropped on load
 * because the paragraph may have been handed to someone else since.
 */

import { SpanSelection } from './span.js';

export const MAX_QUESTION_CHARS = 200;
export const PAIRS_PER_PARAGRAPH = 5;

export interface DraftPair {
  question: string;
  selection: SpanSelection;
}

export interface Draft {
  leaseId: number;
  paragraphId: string;
  leaseExpiresAt: number; // unix seconds, from the lease
  pairs: DraftPair[];
}

export function newDraft(leaseId: number, paragraphId: string, leaseExpiresAt: number): Draft {
  return { leaseId, paragraphId, leaseExpiresAt, pairs: [] };
}

export function questionTooLong(question: string): boolean {
  return question.length > MAX_QUESTION_CHARS;
}

/** A pair is storable once it has a question within bounds and a selection. */
export function pairComplete(pair: DraftPair): boolean {
  return pair.question.trim() !== '' && !questionTooLong(pair.question);
}

export function progress(draft: Draft): number {
  return draft.pairs.filter(pairComplete).length;
}

export function canSubmit(draft: Draft): boolean {
  return draft.pairs.length === PAIRS_PER_PARAGRAPH && draft.pairs.every(pairComplete);
}

const keyFor = (leaseId: number) => `annoforge.draft.${leaseId}`;

export function saveDraft(storage: Storage, draft: Draft): void {
  storage.setItem(keyFor(draft.leaseId), JSON.stringify(draft));
}

export function loadDraft(storage: Storage, leaseId: number, nowSeconds = Date.now() / 1000): Draft | null {
  const raw = storage.getItem(keyFor(leaseId));
  if (raw === null) return null;
  let draft: Draft;
  try {
    draft = JSON.parse(raw) as Draft;
  } catch {
    storage.removeItem(keyFor(leaseId));
    return null;
  }
  if (nowSeconds >= draft.leaseExpiresAt) {
    storage.removeItem(keyFor(leaseId));
    return null;
  }
  return draft;
}

export function clearDraft(storage: Storage, leaseId: number): void {
  storage.removeItem(keyFor(leaseId));
}
