// Two-click span selection: first click picks the answer's first word,
// second click its last. Word-level only, so no selection can cut a word.

import { Word, wordAt } from './words.js';

export interface SpanSelection {
  firstWordIndex: number;
  lastWordIndex: number;
}

/**
 * Combine two click offsets into a selection. Returns null when either
 * click misses every word (such clicks are ignored by the UI).
 */
export function selectSpan(click1: number, click2: number, words: Word[]): SpanSelection | null {
  const a = wordAt(words, click1);
  const b = wordAt(words, click2);
  if (a < 0 || b < 0) return null;
  return a <= b
    ? { firstWordIndex: a, lastWordIndex: b }
    : { firstWordIndex: b, lastWordIndex: a };
}

/** Character range covered by a selection: start of first word to end of last. */
export function charRange(sel: SpanSelection, words: Word[]): { start: number; end: number } {
  const first = words[sel.firstWordIndex];
  const last = words[sel.lastWordIndex];
  if (!first || !last) throw new Error(`selection out of range: ${JSON.stringify(sel)}`);
  return { start: first.start, end: last.end };
}

/** The answer payload the API expects for a selection over `text`. */
export function toAnswer(text: string, sel: SpanSelection, words: Word[]): { answer_text: string; answer_start: number } {
  const range = charRange(sel, words);
  return { answer_text: text.slice(range.start, range.end), answer_start: range.start };
}
