// Additional-answer view: the question is already written, the task is to
// select the matching span or to flag. API refusals show up verbatim and
// the form re-enables, rolling the optimistic disable back.

import { ApiClient, ApiError, Paragraph, QuestionSummary } from './api.js';
import { createParagraphSelector } from './paragraph.js';
import { toAnswer } from './span.js';

export type AdditionalApi = Pick<ApiClient, 'submitAdditionalAnswer' | 'flagQuestion'>;

export const FLAG_REASONS: ReadonlyArray<{ value: string; label: string }> = [
  { value: 'unanswerable', label: 'Sans réponse dans le paragraphe' },
  { value: 'ambiguous', label: 'Ambiguë' },
  { value: 'offensive', label: 'Offensante' },
];

export interface AdditionalViewOptions {
  doc: Document;
  api: AdditionalApi;
  paragraph: Paragraph;
  question: QuestionSummary;
  onDone: () => void; // answer or flag accepted; load the next task
}

export function createAdditionalView(opts: AdditionalViewOptions): HTMLElement {
  const { doc, api, paragraph, question } = opts;

  const element = doc.createElement('article');
  element.className = 'additional';

  const heading = doc.createElement('h2');
  heading.textContent = paragraph.article_title;
  element.appendChild(heading);

  const questionLine = doc.createElement('p');
  questionLine.className = 'question-read-only';
  questionLine.textContent = question.question;
  element.appendChild(questionLine);

  const selector = createParagraphSelector(doc, paragraph.text, () => refresh());
  element.appendChild(selector.element);

  const preview = doc.createElement('p');
  preview.className = 'answer-preview';
  element.appendChild(preview);

  const submitBtn = doc.createElement('button');
  submitBtn.className = 'submit-answer';
  submitBtn.textContent = 'Valider cette réponse';
  element.appendChild(submitBtn);

  const flagBlock = doc.createElement('div');
  flagBlock.className = 'flag-block';
  const flagSelect = doc.createElement('select');
  flagSelect.className = 'flag-reason';
  for (const reason of FLAG_REASONS) {
    const option = doc.createElement('option');
    option.value = reason.value;
    option.textContent = reason.label;
    flagSelect.appendChild(option);
  }
  flagBlock.appendChild(flagSelect);
  const flagBtn = doc.createElement('button');
  flagBtn.className = 'flag';
  flagBtn.textContent = 'Signaler la question';
  flagBlock.appendChild(flagBtn);
  element.appendChild(flagBlock);

  const errorLine = doc.createElement('p');
  errorLine.className = 'error';
  errorLine.hidden = true;
  element.appendChild(errorLine);

  function refresh(): void {
    const sel = selector.getSelection();
    preview.textContent = sel
      ? `Réponse : « ${toAnswer(paragraph.text, sel, selector.words).answer_text} »`
      : 'Sélectionnez la réponse dans le paragraphe.';
    submitBtn.disabled = sel === null;
  }

  function setBusy(busy: boolean): void {
    submitBtn.disabled = busy || selector.getSelection() === null;
    flagBtn.disabled = busy;
  }

  async function run(action: () => Promise<unknown>): Promise<void> {
    errorLine.hidden = true;
    setBusy(true);
    try {
      await action();
      opts.onDone();
    } catch (err) {
      // roll the form back to its pre-submit state
      setBusy(false);
      if (err instanceof ApiError) {
        errorLine.textContent = `${err.code} : ${err.message}`;
        errorLine.hidden = false;
      } else {
        throw err;
      }
    }
  }

  submitBtn.addEventListener('click', () => {
    const sel = selector.getSelection();
    if (sel === null) return;
    void run(() =>
      api.submitAdditionalAnswer(question.id, toAnswer(paragraph.text, sel, selector.words)),
    );
  });

  flagBtn.addEventListener('click', () => {
    void run(() => api.flagQuestion(question.id, flagSelect.value));
  });

  refresh();
  return element;
}
