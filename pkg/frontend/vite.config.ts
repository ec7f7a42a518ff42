import { defineConfig } from 'vitest/config';

// The wizard is served by the session service itself, so tests emulate the
// same-origin setup: the page origin below must match tests/global-setup.ts.
export const SERVICE_URL = 'http://127.0.0.1:8917';

export default defineConfig({
  base: './', // the bundle is served under /ui by the session service
  test: {
    environment: 'happy-dom',
    environmentOptions: {
      happyDOM: { url: SERVICE_URL },
    },
    globals: true,
    globalSetup: './tests/global-setup.ts',
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
