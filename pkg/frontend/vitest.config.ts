import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the correction-loop test synthesizes a corpus and boots the real service
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
