import type { FeatureOffer, FeatureOption, FinalResult } from './api';
import type { UiSessionState } from './state';

export type { FeatureOffer, FeatureOption, FinalResult, UiSessionState };

/** Everything the wizard needs to paint one frame. */
export interface UiRender {
  state: UiSessionState;
  error: string | null;
  busy: boolean;
}
