// Wire format shared with the session server: one canonical-JSON message
// per WebSocket text frame, {"v", "type", "payload"}. The client only ever
// sends Join / Key / Ready and never carries game state in any message.

export const PROTOCOL_VERSION = 1;

export type CellColor = string | null;
export type RleRun = [number, CellColor];

export interface GameRef {
  gameId: string;
  agentId: string;
  playerId: string | null;
}

export interface PieceShape {
  id: string;
  displayName: string;
  color: string;
  rotations: [number, number][][];
}

export interface ClientConfig {
  sessionId: string;
  protocolVersion: number;
  boardsPerPlayer: number;
  tickHz: number;
  board: { width: number; height: number };
  mode: { superhuman: boolean; integrated: boolean };
  freezeBudgetTicks: number | null;
  games: GameRef[];
  ownGames: string[];
  pieces: PieceShape[];
  disclosedRules: { ruleId: string; [k: string]: unknown }[];
}

export interface BoardSnapshot {
  gameId: string;
  agentId: string;
  playerId: string | null;
  grid: RleRun[];
  score: number;
  level: number;
  totalLines: number;
  nextPieceId: string;
  currentPieceId: string;
  status: string;
  own: boolean;
  selected: boolean;
  frozen: boolean;
}

export interface SessionEventJson {
  seq: number;
  tick: number;
  kind: string;
  payload: Record<string, unknown>;
}

export type ServerMessage =
  | { type: "Welcome"; payload: { playerId: string; config: ClientConfig } }
  | { type: "StateSnapshot"; payload: { tick: number; boards: BoardSnapshot[] } }
  | { type: "EventFrame"; payload: { events: SessionEventJson[] } }
  | { type: "RuleNotice"; payload: { ruleId: string; text: string } }
  | { type: "Error"; payload: { code: string; message: string } };

export type ClientMessage =
  | { type: "Join"; payload: { sessionId: string; playerName: string } }
  | { type: "Key"; payload: { key: string } }
  | { type: "Ready"; payload: Record<string, never> };

const SERVER_TYPES = new Set([
  "Welcome", "StateSnapshot", "EventFrame", "RuleNotice", "Error",
]);

export function encode(msg: ClientMessage): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: msg.type, payload: msg.payload });
}

export function keyMessage(key: string): ClientMessage {
  return { type: "Key", payload: { key } };
}

export function joinMessage(sessionId: string, playerName: string): ClientMessage {
  return { type: "Join", payload: { sessionId, playerName } };
}

/** Parse a server frame; returns null for anything malformed or unknown so a
 * broken frame can never take the client down. */
export function decode(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const d = doc as Record<string, unknown>;
  if (typeof d.v !== "number" || typeof d.type !== "string") return null;
  if (!SERVER_TYPES.has(d.type)) return null;
  if (typeof d.payload !== "object" || d.payload === null) return null;
  return { type: d.type, payload: d.payload } as ServerMessage;
}

/** Expand a row-major run-length grid into height rows of width cells. */
export function expandGrid(runs: RleRun[], width: number, height: number): CellColor[][] {
  const cells: CellColor[] = [];
  for (const [count, color] of runs) {
    for (let i = 0; i < count; i++) cells.push(color);
  }
  if (cells.length !== width * height) {
    throw new Error(`RLE expands to ${cells.length} cells, expected ${width * height}`);
  }
  const grid: CellColor[][] = [];
  for (let r = 0; r < height; r++) {
    grid.push(cells.slice(r * width, (r + 1) * width));
  }
  return grid;
}
