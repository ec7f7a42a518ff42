/**
 * Typed client for the minimization session API. Pure transport: every offer
 * and option rendered by the UI comes verbatim from these responses.
 */

export interface FeatureOption {
  id: string;
  kind: 'range' | 'groups' | 'any';
  start?: number | null;
  end?: number | null;
  categories?: string[] | null;
  label: string;
}

export interface FeatureOffer {
  feature: string;
  status: 'untouched' | 'generalized' | 'suppressed';
  expects_exact_value: boolean;
  options: FeatureOption[];
}

export interface TranscriptEntry {
  feature: string;
  status: string;
  disclosed: Record<string, unknown>;
}

export interface FinalResult {
  label: string;
  transcript: TranscriptEntry[];
}

export interface CreateSessionResponse {
  session_id: string;
  offers: FeatureOffer[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly code: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export class SessionApi {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  createSession(): Promise<CreateSessionResponse> {
    return this.post('/sessions');
  }

  answer(sessionId: string, feature: string, optionId: string): Promise<{ offers: FeatureOffer[] }> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/answers`, {
      feature,
      option_id: optionId,
    });
  }

  finalize(sessionId: string): Promise<FinalResult> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/finalize`);
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method: 'POST',
        headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, 'unreachable', 0);
    }
    if (!response.ok) {
      let code = 'http_error';
      let message = `HTTP ${response.status}`;
      try {
        const payload = (await response.json()) as { error?: { code?: string; message?: string } };
        code = payload.error?.code ?? code;
        message = payload.error?.message ?? message;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(message, code, response.status);
    }
    return (await response.json()) as T;
  }
}
