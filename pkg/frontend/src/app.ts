/**
 * Screen-by-screen shell: account, onboarding quiz, category picker,
 * annotation, feedback, additional answers. One screen owns the root
 * element at a time; every transition goes through the API client, so
 * nothing here bypasses the documented routes.
 */

import { createAdditionalView } from './additional.js';
import { ApiClient, ApiError, CategoryRow, ContributorStats } from './api.js';
import { createAnnotateView } from './annotate.js';

const STATS_CACHE_KEY = 'annoforge.stats';

export interface App {
  start(): void;
}

export function createApp(doc: Document, api: ApiClient, storage: Storage, root: HTMLElement): App {
  function screen(className: string, title: string): HTMLElement {
    root.textContent = '';
    const section = doc.createElement('section');
    section.className = `screen ${className}`;
    const h1 = doc.createElement('h1');
    h1.textContent = title;
    section.appendChild(h1);
    root.appendChild(section);
    return section;
  }

  function errorLine(parent: HTMLElement): (err: unknown) => void {
    const line = doc.createElement('p');
    line.className = 'error';
    line.hidden = true;
    parent.appendChild(line);
    return (err) => {
      line.textContent = err instanceof ApiError ? `${err.code} : ${err.message}` : String(err);
      line.hidden = false;
    };
  }

  function button(parent: HTMLElement, label: string, onClick: () => void): HTMLButtonElement {
    const btn = doc.createElement('button');
    btn.textContent = label;
    btn.addEventListener('click', onClick);
    parent.appendChild(btn);
    return btn;
  }

  function input(parent: HTMLElement, type: string, placeholder: string): HTMLInputElement {
    const field = doc.createElement('input');
    field.type = type;
    field.placeholder = placeholder;
    parent.appendChild(field);
    return field;
  }

  // -- account ---------------------------------------------------------

  function showAuth(): void {
    const section = screen('auth', 'Contribuer aux questions-réponses');
    const email = input(section, 'email', 'Adresse électronique');
    const password = input(section, 'password', 'Mot de passe');
    const showError = errorLine(section);
    button(section, 'Se connecter', async () => {
      try {
        await api.login(email.value, password.value);
        showOnboarding();
      } catch (err) {
        if (err instanceof ApiError && err.code === 'EMAIL_UNVERIFIED') showVerify();
        else showError(err);
      }
    });
    button(section, 'Créer un compte', async () => {
      try {
        await api.register(email.value, password.value);
        showVerify();
      } catch (err) {
        showError(err);
      }
    });
  }

  function showVerify(): void {
    const section = screen('verify', 'Confirmez votre adresse');
    const note = doc.createElement('p');
    note.textContent = 'Un jeton de confirmation vous a été envoyé. Collez-le ici.';
    section.appendChild(note);
    const token = input(section, 'text', 'Jeton');
    const showError = errorLine(section);
    button(section, 'Confirmer', async () => {
      try {
        await api.verifyEmail(token.value);
        showAuth();
      } catch (err) {
        showError(err);
      }
    });
  }

  // -- onboarding ------------------------------------------------------

  async function showOnboarding(): Promise<void> {
    const definition = await api.onboarding();
    if (definition.passed) {
      showCategories();
      return;
    }
    if (definition.questions.length === 0) {
      await api.submitOnboarding({});
      showCategories();
      return;
    }
    const section = screen('onboarding', 'Avant de commencer');
    const picks: Record<string, number> = {};
    definition.questions.forEach((q, qi) => {
      const block = doc.createElement('fieldset');
      const legend = doc.createElement('legend');
      legend.textContent = q.text;
      block.appendChild(legend);
      q.choices.forEach((choice, ci) => {
        const label = doc.createElement('label');
        const radio = doc.createElement('input');
        radio.type = 'radio';
        radio.name = `q${qi}`;
        radio.addEventListener('change', () => {
          picks[q.id] = ci;
        });
        label.appendChild(radio);
        label.appendChild(doc.createTextNode(' ' + choice));
        block.appendChild(label);
      });
      section.appendChild(block);
    });
    const showError = errorLine(section);
    button(section, 'Valider mes réponses', async () => {
      try {
        const out = await api.submitOnboarding(picks);
        if (out.passed) showCategories();
        else showError(new ApiError('RETRY', 'Certaines réponses sont incorrectes, réessayez.', 200));
      } catch (err) {
        showError(err);
      }
    });
  }

  // -- category choice and work loop ------------------------------------

  async function showCategories(): Promise<void> {
    const rows = await api.categories();
    const section = screen('categories', 'Choisissez un thème');
    const list = doc.createElement('ul');
    list.className = 'category-list';
    rows.forEach((row: CategoryRow) => {
      const item = doc.createElement('li');
      const btn = doc.createElement('button');
      btn.className = 'category';
      btn.textContent = `${row.category} (${row.paragraphs_available} paragraphes libres)`;
      btn.disabled = row.paragraphs_available === 0;
      btn.addEventListener('click', () => void startAnnotation(row.category));
      item.appendChild(btn);
      list.appendChild(item);
    });
    section.appendChild(list);
    button(section, 'Réponses additionnelles', () => void showAdditional());
  }

  async function startAnnotation(category: string): Promise<void> {
    let leased;
    try {
      leased = await api.leaseParagraph(category);
    } catch (err) {
      if (err instanceof ApiError && err.code === 'NO_WORK') {
        const section = screen('no-work', 'Plus rien dans ce thème');
        button(section, 'Retour aux thèmes', () => void showCategories());
        return;
      }
      throw err;
    }
    const section = screen('annotate-screen', leased.paragraph.category);
    const view = createAnnotateView({
      doc,
      api,
      paragraph: leased.paragraph,
      lease: leased.lease,
      storage,
      onSubmitted: () => void showFeedback(category),
      onNewParagraph: () => void startAnnotation(category),
    });
    section.appendChild(view.element);
  }

  async function showFeedback(category: string): Promise<void> {
    const section = screen('feedback', 'Merci, cinq de plus !');
    let stats: ContributorStats | null = null;
    let stale = false;
    try {
      stats = await api.myStats();
      storage.setItem(STATS_CACHE_KEY, JSON.stringify(stats));
    } catch {
      const cached = storage.getItem(STATS_CACHE_KEY);
      if (cached !== null) {
        stats = JSON.parse(cached) as ContributorStats;
        stale = true;
      }
    }
    const list = doc.createElement('dl');
    list.className = 'stats';
    const rows: Array<[string, number]> = stats
      ? [
          ['Paragraphes terminés', stats.paragraphs_completed],
          ['Questions rédigées', stats.questions_written],
          ['Réponses additionnelles', stats.additional_answers],
          ['Signalements', stats.flags],
        ]
      : [];
    for (const [label, value] of rows) {
      const dt = doc.createElement('dt');
      dt.textContent = label;
      const dd = doc.createElement('dd');
      dd.textContent = String(value);
      list.appendChild(dt);
      list.appendChild(dd);
    }
    section.appendChild(list);
    if (stale) {
      const note = doc.createElement('p');
      note.className = 'stale-note';
      note.textContent = 'Chiffres de la dernière session : le service ne répond pas.';
      section.appendChild(note);
    }
    button(section, 'Un autre paragraphe', () => void startAnnotation(category));
    button(section, 'Changer de thème', () => void showCategories());
  }

  // -- additional answers ------------------------------------------------

  async function showAdditional(): Promise<void> {
    let task;
    try {
      task = await api.nextAdditional();
    } catch (err) {
      if (err instanceof ApiError && err.code === 'NO_WORK') {
        const section = screen('no-work', 'Aucune tâche disponible');
        button(section, 'Retour aux thèmes', () => void showCategories());
        return;
      }
      if (err instanceof ApiError) {
        const section = screen('denied', 'Accès refusé');
        const line = doc.createElement('p');
        line.textContent = `${err.code} : ${err.message}`;
        section.appendChild(line);
        button(section, 'Retour aux thèmes', () => void showCategories());
        return;
      }
      throw err;
    }
    const section = screen('additional-screen', 'Réponse additionnelle');
    section.appendChild(
      createAdditionalView({
        doc,
        api,
        paragraph: task.paragraph,
        question: task.question,
        onDone: () => void showAdditional(),
      }),
    );
  }

  return { start: showAuth };
}
