import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    // the e2e spec boots the real service
    testTimeout: 60000,
    hookTimeout: 60000,
  },
});
