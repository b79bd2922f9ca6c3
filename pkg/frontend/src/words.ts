/**
 * Word tokenization, duplicated from the backend rule.
 *
 * A word is a maximal run of letters/digits, optionally followed by one
 * apostrophe, so French elision pairs stay separate: "l'île" is "l'" + "île".
 * Underscores, punctuation and whitespace are boundaries. The fixture
 * tests/fixtures/word_boundaries.json (repository root) pins both sides
 * of this duplication to the same offsets.
 */

const WORD_RE = /[\p{L}\p{N}]+['’]?/gu;

export interface Word {
  text: string;
  start: number;
  end: number; // exclusive
}

export function tokenize(text: string): Word[] {
  const words: Word[] = [];
  for (const m of text.matchAll(WORD_RE)) {
    words.push({ text: m[0], start: m.index, end: m.index + m[0].length });
  }
  return words;
}

/** Index of the word whose [start, end) contains the character offset, or -1. */
export function wordAt(words: Word[], offset: number): number {
  for (let i = 0; i < words.length; i++) {
    const w = words[i]!;
    if (offset >= w.start && offset < w.end) return i;
  }
  return -1;
}

export function isWordAligned(text: string, start: number, length: number): boolean {
  if (length <= 0) return false;
  const words = tokenize(text);
  return words.some((w) => w.start === start) && words.some((w) => w.end === start + length);
}
