/**
 * The paragraph reading area: every word becomes a clickable span.
 *
 * Selection is two taps: anchor word, then closing word (in either
 * order). Taps between words change nothing. The full inter-word text,
 * punctuation included, is preserved so the highlighted range reads
 * exactly like the answer that will be submitted.
 */

import { SpanSelection, selectSpan } from './span.js';
import { Word, tokenize } from './words.js';

export interface ParagraphSelector {
  element: HTMLElement;
  words: Word[];
  getSelection(): SpanSelection | null;
  setSelection(sel: SpanSelection | null): void;
}

export function createParagraphSelector(
  doc: Document,
  text: string,
  onChange?: (sel: SpanSelection | null) => void,
): ParagraphSelector {
  const words = tokenize(text);
  const element = doc.createElement('p');
  element.className = 'paragraph';

  let cursor = 0;
  const wordEls: HTMLElement[] = [];
  for (const word of words) {
    if (word.start > cursor) {
      element.appendChild(doc.createTextNode(text.slice(cursor, word.start)));
    }
    const el = doc.createElement('span');
    el.className = 'word';
    el.textContent = word.text;
    element.appendChild(el);
    wordEls.push(el);
    cursor = word.end;
  }
  if (cursor < text.length) {
    element.appendChild(doc.createTextNode(text.slice(cursor)));
  }

  let selection: SpanSelection | null = null;
  let anchor: number | null = null;

  function paint(): void {
    wordEls.forEach((el, i) => {
      const inSelection =
        selection !== null && i >= selection.firstWordIndex && i <= selection.lastWordIndex;
      el.classList.toggle('selected', inSelection);
      el.classList.toggle('anchor', anchor === i);
    });
  }

  wordEls.forEach((el, i) => {
    el.addEventListener('click', () => {
      if (anchor === null) {
        anchor = i;
        selection = null;
      } else {
        // both clicks sit inside words here, so selectSpan cannot miss
        selection = selectSpan(words[anchor]!.start, words[i]!.start, words);
        anchor = null;
      }
      paint();
      onChange?.(selection);
    });
  });

  return {
    element,
    words,
    getSelection: () => selection,
    setSelection: (sel) => {
      selection = sel;
      anchor = null;
      paint();
    },
  };
}
