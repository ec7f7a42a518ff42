/**
 * Client-side session state: the session id, the offers exactly as last
 * received, the local answer history, and the final result. Persisted to
 * sessionStorage so a refresh restores the flow by session id.
 */

import type { FeatureOffer, FinalResult } from './api';

export interface AnsweredEntry {
  feature: string;
  status: string;
  optionId: string;
  label: string;
}

export interface UiSessionState {
  sessionId: string | null;
  offers: FeatureOffer[];
  answered: AnsweredEntry[];
  result: FinalResult | null;
}

const STORAGE_KEY = 'datamin.session';

export function emptyState(): UiSessionState {
  return { sessionId: null, offers: [], answered: [], result: null };
}

export class SessionStore {
  state: UiSessionState = emptyState();

  constructor(private readonly storage: Storage | null = null) {}

  start(sessionId: string, offers: FeatureOffer[]): void {
    this.state = { sessionId, offers, answered: [], result: null };
    this.persist();
  }

  /** Replace offers wholesale with the server response; move the answered
   * feature into the history panel. */
  applyAnswer(entry: AnsweredEntry, offers: FeatureOffer[]): void {
    this.state = {
      ...this.state,
      offers,
      answered: [...this.state.answered, entry],
    };
    this.persist();
  }

  finish(result: FinalResult): void {
    this.state = { ...this.state, result };
    this.persist();
  }

  reset(): void {
    this.state = emptyState();
    this.storage?.removeItem(STORAGE_KEY);
  }

  /** Rehydrate a live flow after a page refresh. */
  restore(): boolean {
    const raw = this.storage?.getItem(STORAGE_KEY);
    if (!raw) return false;
    try {
      const parsed = JSON.parse(raw) as UiSessionState;
      if (!parsed.sessionId) return false;
      this.state = parsed;
      return true;
    } catch {
      return false;
    }
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(this.state));
  }
}
