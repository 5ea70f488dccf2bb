export type ScoringMode = "constant" | "mean_luminance" | "echo_header";

export interface StubConfig {
  port: number;
  mode: ScoringMode;
  /** Score returned in constant mode. */
  constant: number;
  /** Artificial delay added to every /score reply, in milliseconds. */
  latencyMs: number;
  /** Probability in [0, 1] that a /score request is answered with failStatus. */
  failRate: number;
  failStatus: number;
}

export const DEFAULTS: StubConfig = {
  port: 8787,
  mode: "constant",
  constant: 1.0,
  latencyMs: 0,
  failRate: 0,
  failStatus: 500,
};

const MODES: ScoringMode[] = ["constant", "mean_luminance", "echo_header"];

export function validateConfig(config: StubConfig): StubConfig {
  if (!MODES.includes(config.mode)) {
    throw new Error(`mode must be one of ${MODES.join(", ")}, got ${JSON.stringify(config.mode)}`);
  }
  if (!Number.isFinite(config.constant)) {
    throw new Error("constant score must be a finite number");
  }
  if (!(config.latencyMs >= 0)) {
    throw new Error("latency must be >= 0 ms");
  }
  if (!(config.failRate >= 0 && config.failRate <= 1)) {
    throw new Error("fail rate must lie in [0, 1]");
  }
  if (!Number.isInteger(config.failStatus) || config.failStatus < 400 || config.failStatus > 599) {
    throw new Error("fail status must be a 4xx/5xx status code");
  }
  if (!Number.isInteger(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error("port must be an integer in [0, 65535]");
  }
  return config;
}

/** CLI flags mirror the config one to one: --port, --mode, --constant,
 * --latency-ms, --fail-rate, --fail-status. */
export function parseArgs(argv: string[]): StubConfig {
  const config = { ...DEFAULTS };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`missing value for ${flag}`);
      return argv[i];
    };
    switch (flag) {
      case "--port":
        config.port = Number(next());
        break;
      case "--mode":
        config.mode = next() as ScoringMode;
        break;
      case "--constant":
        config.constant = Number(next());
        break;
      case "--latency-ms":
        config.latencyMs = Number(next());
        break;
      case "--fail-rate":
        config.failRate = Number(next());
        break;
      case "--fail-status":
        config.failStatus = Number(next());
        break;
      case "--help":
        throw new Error(usage());
      default:
        throw new Error(`unknown flag ${flag}\n${usage()}`);
    }
  }
  return validateConfig(config);
}

export function usage(): string {
  return [
    "scorer-stub [--port N] [--mode constant|mean_luminance|echo_header]",
    "            [--constant V] [--latency-ms N] [--fail-rate R] [--fail-status CODE]",
  ].join("\n");
}
