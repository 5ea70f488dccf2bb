import http from "node:http";

import { StubConfig, validateConfig } from "./config.js";
import { looksLikePng, meanLuminance } from "./luminance.js";

function sendJson(res: http.ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

function readBody(req: http.IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk: Buffer) => chunks.push(chunk));
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/** Compute the score for one request, or throw {status, message}. */
function scoreRequest(config: StubConfig, req: http.IncomingMessage, body: Buffer): number {
  if (config.mode === "echo_header") {
    const header = req.headers["x-score"];
    const value = Number(Array.isArray(header) ? header[0] : header);
    if (header === undefined || !Number.isFinite(value)) {
      throw { status: 400, message: "echo_header mode needs a finite X-Score request header" };
    }
    return value;
  }
  if (!looksLikePng(body)) {
    throw { status: 400, message: "request body is not a PNG image" };
  }
  if (config.mode === "constant") {
    return config.constant;
  }
  try {
    return meanLuminance(body);
  } catch (err) {
    throw { status: 400, message: `cannot decode PNG: ${(err as Error).message}` };
  }
}

export function createScorerServer(config: StubConfig): http.Server {
  validateConfig(config);
  return http.createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/health") {
        sendJson(res, 200, { mode: config.mode });
        return;
      }
      if (req.url !== "/score") {
        sendJson(res, 404, { error: `no such route: ${req.method} ${req.url}` });
        return;
      }
      if (req.method !== "POST") {
        sendJson(res, 405, { error: "use POST /score with a PNG request body" });
        return;
      }
      const body = await readBody(req);
      if (config.latencyMs > 0) {
        await sleep(config.latencyMs);
      }
      if (config.failRate > 0 && Math.random() < config.failRate) {
        sendJson(res, config.failStatus, { error: "injected failure" });
        return;
      }
      const score = scoreRequest(config, req, body);
      sendJson(res, 200, { score });
    } catch (err) {
      const failure = err as { status?: number; message?: string };
      sendJson(res, failure.status ?? 500, { error: failure.message ?? String(err) });
    }
  });
}

export function startServer(config: StubConfig): Promise<http.Server> {
  const server = createScorerServer(config);
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(config.port, () => resolve(server));
  });
}
