/**
 * Wizard rendering. Every control mirrors the last server response: option
 * buttons carry server-issued option ids, and a free-form input exists only
 * for features the server marked as expecting an exact value.
 */

import type { FeatureOffer, FeatureOption, UiRender } from './types';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function describeOption(option: FeatureOption): string {
  if (option.kind === 'range') {
    return option.label || `${option.start} to ${option.end}`;
  }
  if (option.kind === 'groups') {
    return option.label || (option.categories ?? []).join(', ');
  }
  return 'Prefer not to narrow';
}

function renderOffer(offer: FeatureOffer): string {
  const feature = escapeHtml(offer.feature);
  const informative = offer.options.filter((o) => o.kind !== 'any');
  const anyOption = offer.options.find((o) => o.kind === 'any');

  let controls = '';
  if (offer.expects_exact_value) {
    controls += `<div class="exact-entry">
      <input type="text" class="exact-input" data-feature="${feature}"
             aria-label="exact value for ${feature}" placeholder="exact value">
      <button type="button" class="answer exact-submit" data-feature="${feature}">Submit value</button>
    </div>`;
  } else if (informative.length === 0) {
    controls += `<p class="no-longer-needed">No longer needed &mdash; any value fits what you already shared.</p>`;
  } else {
    controls += informative
      .map(
        (o) => `<button type="button" class="answer option" data-feature="${feature}"
                data-option-id="${escapeHtml(o.id)}">${escapeHtml(describeOption(o))}</button>`,
      )
      .join('\n');
  }
  if (anyOption) {
    controls += `\n<button type="button" class="answer decline" data-feature="${feature}"
      data-option-id="${escapeHtml(anyOption.id)}">${escapeHtml(describeOption(anyOption))}</button>`;
  }

  return `<section class="offer" data-feature="${feature}" data-status="${offer.status}">
    <h3>${feature}</h3>
    ${controls}
  </section>`;
}

function renderAnswered(render: UiRender): string {
  if (render.state.answered.length === 0) return '';
  const rows = render.state.answered
    .map(
      (a) => `<li data-feature="${escapeHtml(a.feature)}">
        <span class="answered-feature">${escapeHtml(a.feature)}</span>:
        <span class="answered-value">${escapeHtml(a.label)}</span></li>`,
    )
    .join('\n');
  return `<aside class="answered"><h2>Shared so far</h2><ul>${rows}</ul></aside>`;
}

function renderResult(render: UiRender): string {
  const result = render.state.result;
  if (!result) return '';
  const rows = result.transcript
    .map((entry) => {
      const disclosed = entry.disclosed as Record<string, unknown>;
      let text: string;
      if (disclosed.range) {
        const r = disclosed.range as { start: number; end: number };
        text = `range ${r.start} to ${r.end}`;
      } else if (disclosed.categories) {
        text = `one of ${(disclosed.categories as string[]).join(', ')}`;
      } else if (disclosed.value !== undefined) {
        text = `exact value ${String(disclosed.value)}`;
      } else {
        text = 'not disclosed';
      }
      return `<li data-feature="${escapeHtml(entry.feature)}" data-status="${escapeHtml(entry.status)}">
        <span class="transcript-feature">${escapeHtml(entry.feature)}</span>:
        <span class="transcript-disclosed">${escapeHtml(text)}</span></li>`;
    })
    .join('\n');
  return `<section class="result">
    <h2>Prediction</h2>
    <p class="label">Predicted label: <strong>${escapeHtml(result.label)}</strong></p>
    <h2>What you actually disclosed</h2>
    <ul class="transcript">${rows}</ul>
    <button type="button" class="restart">Start over</button>
  </section>`;
}

export function renderWizard(root: HTMLElement, render: UiRender): void {
  const { state, error, busy } = render;
  const parts: string[] = [];

  if (error) {
    parts.push(`<div class="banner error" role="alert">
      <span>${escapeHtml(error)}</span>
      <button type="button" class="retry">Retry</button>
    </div>`);
  }

  if (state.result) {
    parts.push(renderResult(render));
  } else if (state.sessionId) {
    parts.push(renderAnswered(render));
    parts.push('<main class="offers">');
    for (const offer of state.offers) {
      parts.push(renderOffer(offer));
    }
    parts.push('</main>');
    parts.push(
      `<button type="button" class="finalize"${busy ? ' disabled' : ''}>Get my prediction</button>`,
    );
  } else if (!error) {
    parts.push('<p class="loading">Contacting the minimization service&hellip;</p>');
  }

  root.innerHTML = parts.join('\n');
}
