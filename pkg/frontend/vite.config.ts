import { defineConfig } from "vite";
import react from "@vitejs/plugin-react";

// base "./" so the bundle works when the API server mounts dist/ at any path
export default defineConfig({
  plugins: [react()],
  base: "./",
  server: {
    proxy: {
      // dev convenience: talk to a locally running API server
      "/models": "http://127.0.0.1:8000",
      "/sessions": "http://127.0.0.1:8000",
    },
  },
});
