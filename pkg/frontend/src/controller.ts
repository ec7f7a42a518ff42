/**
 * Flow controller: one in-flight request at a time, state replaced only by
 * server responses, answered features moved to the history panel.
 */

import { ApiError, SessionApi } from './api';
import type { FeatureOffer } from './api';
import { SessionStore } from './state';
import { renderWizard } from './wizard';

function optionLabel(offer: FeatureOffer, optionId: string): string {
  const option = offer.options.find((o) => o.id === optionId);
  if (option) return option.label || option.id;
  return optionId; // exact values travel as the option id itself
}

export class WizardController {
  private busy = false;
  private error: string | null = null;

  constructor(
    private readonly api: SessionApi,
    private readonly store: SessionStore,
    private readonly root: HTMLElement,
  ) {
    this.root.addEventListener('click', (event) => this.onClick(event));
  }

  async start(): Promise<void> {
    if (this.store.restore()) {
      this.render();
      return;
    }
    await this.run(async () => {
      const created = await this.api.createSession();
      this.store.start(created.session_id, created.offers);
    });
  }

  private onClick(event: Event): void {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    if (target.classList.contains('retry') || target.classList.contains('restart')) {
      this.store.reset();
      void this.start();
      return;
    }
    if (target.classList.contains('finalize')) {
      void this.finalize();
      return;
    }
    if (target.classList.contains('exact-submit')) {
      const feature = target.dataset.feature ?? '';
      const input = this.root.querySelector<HTMLInputElement>(
        `.exact-input[data-feature="${feature}"]`,
      );
      const value = input?.value.trim() ?? '';
      if (feature && value) void this.answer(feature, value);
      return;
    }
    if (target.classList.contains('answer')) {
      const feature = target.dataset.feature ?? '';
      const optionId = target.dataset.optionId ?? '';
      if (feature && optionId) void this.answer(feature, optionId);
    }
  }

  async answer(feature: string, optionId: string): Promise<void> {
    const sessionId = this.store.state.sessionId;
    const offer = this.store.state.offers.find((o) => o.feature === feature);
    if (!sessionId || !offer) return;
    await this.run(async () => {
      const response = await this.api.answer(sessionId, feature, optionId);
      this.store.applyAnswer(
        {
          feature,
          status: offer.status,
          optionId,
          label: offer.expects_exact_value ? optionId : optionLabel(offer, optionId),
        },
        response.offers,
      );
    });
  }

  async finalize(): Promise<void> {
    const sessionId = this.store.state.sessionId;
    if (!sessionId) return;
    await this.run(async () => {
      this.store.finish(await this.api.finalize(sessionId));
    });
  }

  /** Serialize requests: a click while one is in flight is dropped. */
  private async run(action: () => Promise<void>): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.error = null;
    this.render();
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError && err.code === 'protocol_error') {
        // a rejected answer does not change server state, so the offers we
        // already hold are still the server's view; just surface the message
        this.error = err.message;
      } else if (err instanceof ApiError) {
        this.error = err.message;
      } else {
        this.error = String(err);
      }
    } finally {
      this.busy = false;
      this.render();
    }
  }

  private render(): void {
    renderWizard(this.root, { state: this.store.state, error: this.error, busy: this.busy });
  }
}

export function boot(root: HTMLElement, baseUrl = ''): WizardController {
  const storage = typeof sessionStorage === 'undefined' ? null : sessionStorage;
  const controller = new WizardController(new SessionApi(baseUrl), new SessionStore(storage), root);
  void controller.start();
  return controller;
}
