/**
 * Typed client for the annotation service HTTP API.
 *
 * Every method maps 1:1 onto a documented route; errors come back as
 * ApiError carrying the service's {code, message} body plus the HTTP
 * status, so views can branch on stable codes (NO_WORK, LEASE_EXPIRED,
 * QUESTION_TOO_LONG, ...) instead of parsing prose.
 */

export interface UserInfo {
  id: number;
  email: string;
  role: 'regular' | 'admin' | 'superadmin';
  status: 'open' | 'certified';
  email_verified: boolean;
  onboarding_passed: boolean;
}

export interface Paragraph {
  id: string;
  article_title: string;
  category: string;
  index: number;
  text: string;
}

export interface Lease {
  id: number;
  target_id: string;
  kind: 'paragraph' | 'question';
  issued_at: number;
  expires_at: number;
  renewed: boolean;
}

export interface CategoryRow {
  category: string;
  articles: number;
  paragraphs: number;
  paragraphs_available: number;
}

export interface QuestionSummary {
  id: string;
  paragraph_id: string;
  question: string;
  state: string;
  additional_answers: number;
}

export interface OnboardingQuestion {
  id: string;
  text: string;
  choices: string[];
  mandatory: boolean;
}

export interface ContributorStats {
  paragraphs_completed: number;
  questions_written: number;
  additional_answers: number;
  flags: number;
}

export interface AnswerPayload {
  answer_text: string;
  answer_start: number;
}

export interface PairPayload extends AnswerPayload {
  question: string;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  token: string | null = null;

  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let parsed: any;
    try {
      parsed = text === '' ? null : JSON.parse(text);
    } catch {
      throw new ApiError('BAD_RESPONSE', `non-JSON response from ${path}`, response.status);
    }
    if (!response.ok) {
      const code = parsed && typeof parsed.code === 'string' ? parsed.code : 'HTTP_ERROR';
      const message = parsed && typeof parsed.message === 'string' ? parsed.message : `${response.status} on ${path}`;
      throw new ApiError(code, message, response.status);
    }
    return parsed as T;
  }

  // accounts

  async register(email: string, password: string): Promise<UserInfo> {
    const out = await this.request<{ user: UserInfo }>('POST', '/api/users', { email, password });
    return out.user;
  }

  async verifyEmail(token: string): Promise<UserInfo> {
    const out = await this.request<{ user: UserInfo }>('POST', '/api/users/verify', { token });
    return out.user;
  }

  async login(email: string, password: string): Promise<UserInfo> {
    const out = await this.request<{ token: string; expires_at: number; user: UserInfo }>(
      'POST', '/api/sessions', { email, password });
    this.token = out.token;
    return out.user;
  }

  requestPasswordReset(email: string): Promise<{ requested: boolean }> {
    return this.request('POST', '/api/password-reset', { email });
  }

  confirmPasswordReset(token: string, password: string): Promise<{ reset: boolean }> {
    return this.request('POST', '/api/password-reset', { token, password });
  }

  // onboarding

  onboarding(): Promise<{ questions: OnboardingQuestion[]; passed: boolean; version?: string }> {
    return this.request('GET', '/api/onboarding');
  }

  submitOnboarding(answers: Record<string, number>): Promise<{ passed: boolean }> {
    return this.request('POST', '/api/onboarding', { answers });
  }

  // annotation work

  async categories(): Promise<CategoryRow[]> {
    const out = await this.request<{ categories: CategoryRow[] }>('GET', '/api/categories');
    return out.categories;
  }

  leaseParagraph(category: string): Promise<{ paragraph: Paragraph; lease: Lease }> {
    return this.request('POST', '/api/leases', { category });
  }

  async renewLease(leaseId: number): Promise<Lease> {
    const out = await this.request<{ lease: Lease }>('POST', '/api/leases/renew', { lease_id: leaseId });
    return out.lease;
  }

  async submitAnnotations(leaseId: number, pairs: PairPayload[]): Promise<string[]> {
    const out = await this.request<{ question_ids: string[] }>(
      'POST', '/api/annotations', { lease_id: leaseId, pairs });
    return out.question_ids;
  }

  // additional answers and feedback on questions

  nextAdditional(): Promise<{ paragraph: Paragraph; question: QuestionSummary; lease: Lease }> {
    return this.request('GET', '/api/additional/next');
  }

  submitAdditionalAnswer(questionId: string, answer: AnswerPayload): Promise<{ state: string }> {
    return this.request('POST', '/api/additional/answers', {
      question_id: questionId,
      answer_text: answer.answer_text,
      answer_start: answer.answer_start,
    });
  }

  flagQuestion(questionId: string, reason: string): Promise<{ flag: { question_id: string; reason: string } }> {
    return this.request('POST', '/api/flags', { question_id: questionId, reason });
  }

  async myStats(): Promise<ContributorStats> {
    const out = await this.request<{ stats: ContributorStats }>('GET', '/api/me/stats');
    return out.stats;
  }
}
