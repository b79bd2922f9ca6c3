/**
 * Annotation view: read the paragraph, write five question-answer pairs.
 *
 * The question input goes invalid the moment it passes 200 characters
 * and the submit button only wakes up at exactly five saved pairs; the
 * server enforces both rules again on its side. Saved pairs stay
 * editable until submission. Every change lands in localStorage under
 * the lease id, and an expired lease raises a banner instead of wiping
 * anything.
 */

import { ApiClient, ApiError, Lease, Paragraph } from './api.js';

export type AnnotateApi = Pick<ApiClient, 'submitAnnotations'>;
import {
  Draft,
  DraftPair,
  MAX_QUESTION_CHARS,
  PAIRS_PER_PARAGRAPH,
  canSubmit,
  clearDraft,
  loadDraft,
  newDraft,
  progress,
  questionTooLong,
  saveDraft,
} from './drafts.js';
import { createParagraphSelector } from './paragraph.js';
import { SpanSelection, toAnswer } from './span.js';

export interface AnnotateViewOptions {
  doc: Document;
  api: AnnotateApi;
  paragraph: Paragraph;
  lease: Lease;
  storage: Storage;
  now?: () => number; // unix seconds
  onSubmitted: (questionIds: string[]) => void;
  onNewParagraph: () => void;
}

export interface AnnotateView {
  element: HTMLElement;
  draft: Draft;
  leaseExpired(): boolean;
  checkLease(): void;
}

export function createAnnotateView(opts: AnnotateViewOptions): AnnotateView {
  const { doc, api, paragraph, storage } = opts;
  const now = opts.now ?? (() => Date.now() / 1000);
  const lease = opts.lease;

  const draft: Draft =
    loadDraft(storage, lease.id, now()) ??
    newDraft(lease.id, paragraph.id, lease.expires_at);
  let editing: number | null = null;

  const element = doc.createElement('article');
  element.className = 'annotate';

  const heading = doc.createElement('h2');
  heading.textContent = `${paragraph.article_title} (${paragraph.category})`;
  element.appendChild(heading);

  const banner = doc.createElement('div');
  banner.className = 'banner';
  banner.hidden = true;
  const bannerText = doc.createElement('span');
  banner.appendChild(bannerText);
  const newParagraphBtn = doc.createElement('button');
  newParagraphBtn.textContent = 'Demander un nouveau paragraphe';
  newParagraphBtn.addEventListener('click', () => opts.onNewParagraph());
  banner.appendChild(newParagraphBtn);
  element.appendChild(banner);

  const selector = createParagraphSelector(doc, paragraph.text, () => refresh());
  element.appendChild(selector.element);

  const editor = doc.createElement('div');
  editor.className = 'pair-editor';
  element.appendChild(editor);

  const question = doc.createElement('textarea');
  question.className = 'question';
  question.setAttribute('lang', 'fr');
  question.placeholder = 'Votre question sur ce paragraphe';
  editor.appendChild(question);

  const counter = doc.createElement('span');
  counter.className = 'counter';
  editor.appendChild(counter);

  const preview = doc.createElement('p');
  preview.className = 'answer-preview';
  editor.appendChild(preview);

  const saveBtn = doc.createElement('button');
  saveBtn.className = 'save-pair';
  editor.appendChild(saveBtn);

  const pairList = doc.createElement('ol');
  pairList.className = 'pairs';
  element.appendChild(pairList);

  const progressBar = doc.createElement('progress');
  progressBar.max = PAIRS_PER_PARAGRAPH;
  element.appendChild(progressBar);
  const progressText = doc.createElement('span');
  progressText.className = 'progress-text';
  element.appendChild(progressText);

  const submitBtn = doc.createElement('button');
  submitBtn.className = 'submit-batch';
  submitBtn.textContent = 'Envoyer les cinq paires';
  element.appendChild(submitBtn);

  const errorLine = doc.createElement('p');
  errorLine.className = 'error';
  errorLine.hidden = true;
  element.appendChild(errorLine);

  function leaseExpired(): boolean {
    return now() >= lease.expires_at;
  }

  function showBanner(message: string): void {
    bannerText.textContent = message;
    banner.hidden = false;
  }

  function checkLease(): void {
    if (leaseExpired()) {
      showBanner('Le temps imparti pour ce paragraphe est écoulé. Vos paires restent affichées.');
    }
  }

  function currentSelection(): SpanSelection | null {
    return selector.getSelection();
  }

  function refresh(): void {
    const text = question.value;
    counter.textContent = `${text.length}/${MAX_QUESTION_CHARS}`;
    const tooLong = questionTooLong(text);
    question.classList.toggle('invalid', tooLong);
    question.setAttribute('aria-invalid', tooLong ? 'true' : 'false');

    const sel = currentSelection();
    preview.textContent = sel
      ? `Réponse : « ${toAnswer(paragraph.text, sel, selector.words).answer_text} »`
      : 'Sélectionnez la réponse : un clic sur le premier mot, un clic sur le dernier.';

    saveBtn.textContent = editing === null ? 'Enregistrer la paire' : `Mettre à jour la paire ${editing + 1}`;
    saveBtn.disabled =
      tooLong || text.trim() === '' || sel === null ||
      (editing === null && draft.pairs.length >= PAIRS_PER_PARAGRAPH);

    pairList.textContent = '';
    draft.pairs.forEach((pair, i) => {
      const item = doc.createElement('li');
      const label = doc.createElement('span');
      label.textContent = `${pair.question} « ${toAnswer(paragraph.text, pair.selection, selector.words).answer_text} »`;
      item.appendChild(label);
      const edit = doc.createElement('button');
      edit.className = 'edit-pair';
      edit.textContent = 'Modifier';
      edit.addEventListener('click', () => {
        editing = i;
        question.value = pair.question;
        selector.setSelection(pair.selection);
        refresh();
      });
      item.appendChild(edit);
      const remove = doc.createElement('button');
      remove.className = 'remove-pair';
      remove.textContent = 'Supprimer';
      remove.addEventListener('click', () => {
        draft.pairs.splice(i, 1);
        if (editing === i) editing = null;
        saveDraft(storage, draft);
        refresh();
      });
      item.appendChild(remove);
      pairList.appendChild(item);
    });

    const done = progress(draft);
    progressBar.value = done;
    progressText.textContent = `${done}/${PAIRS_PER_PARAGRAPH} paires`;
    submitBtn.disabled = !canSubmit(draft);
  }

  question.addEventListener('input', () => refresh());

  saveBtn.addEventListener('click', () => {
    const sel = currentSelection();
    if (sel === null) return;
    const pair: DraftPair = { question: question.value, selection: sel };
    if (editing === null) {
      draft.pairs.push(pair);
    } else {
      draft.pairs[editing] = pair;
      editing = null;
    }
    question.value = '';
    selector.setSelection(null);
    saveDraft(storage, draft);
    refresh();
  });

  submitBtn.addEventListener('click', async () => {
    errorLine.hidden = true;
    const pairs = draft.pairs.map((pair) => ({
      question: pair.question,
      ...toAnswer(paragraph.text, pair.selection, selector.words),
    }));
    try {
      const ids = await api.submitAnnotations(lease.id, pairs);
      clearDraft(storage, lease.id);
      opts.onSubmitted(ids);
    } catch (err) {
      // the draft is untouched: failed submits must lose nothing
      if (err instanceof ApiError) {
        errorLine.textContent = `${err.code} : ${err.message}`;
        errorLine.hidden = false;
        if (err.code.startsWith('LEASE_')) {
          showBanner('Votre réservation a expiré avant l’envoi. Vos paires restent affichées.');
        }
      } else {
        throw err;
      }
    }
  });

  refresh();
  checkLease();

  return {
    element,
    draft,
    leaseExpired,
    checkLease,
  };
}
