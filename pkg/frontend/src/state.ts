// Client view model and its reducer. The client is thin: every field below
// derives from server messages alone; grids change only when a
// StateSnapshot replaces them. Replaying one transcript always rebuilds the
// same view model.

import {
  BoardSnapshot,
  CellColor,
  ClientConfig,
  ServerMessage,
  SessionEventJson,
  expandGrid,
} from "./protocol.js";

export interface BoardView {
  gameId: string;
  agentId: string;
  playerId: string | null;
  grid: CellColor[][];
  score: number;
  level: number;
  totalLines: number;
  nextPieceId: string | null;
  status: string;
  own: boolean;
  selected: boolean;
  frozen: boolean;
}

export interface NoticeView {
  ruleId: string;
  text: string;
  tick: number;
}

export interface ToastView {
  code: string;
  message: string;
}

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface ViewModel {
  connection: ConnectionState;
  playerId: string | null;
  config: ClientConfig | null;
  tick: number;
  boards: BoardView[];
  notices: NoticeView[];
  toasts: ToastView[];
  sessionOver: boolean;
}

const MAX_TOASTS = 5;

export function initialViewModel(): ViewModel {
  return {
    connection: "connecting",
    playerId: null,
    config: null,
    tick: 0,
    boards: [],
    notices: [],
    toasts: [],
    sessionOver: false,
  };
}

function emptyGrid(width: number, height: number): CellColor[][] {
  const grid: CellColor[][] = [];
  for (let r = 0; r < height; r++) grid.push(new Array(width).fill(null));
  return grid;
}

function boardsFromConfig(config: ClientConfig): BoardView[] {
  return config.games.map((game, index) => ({
    gameId: game.gameId,
    agentId: game.agentId,
    playerId: game.playerId,
    grid: emptyGrid(config.board.width, config.board.height),
    score: 0,
    level: 0,
    totalLines: 0,
    nextPieceId: null,
    status: "active",
    own: config.ownGames.includes(game.gameId),
    // exactly one selected board from the start: the first own board
    selected: game.gameId === config.ownGames[0],
    frozen: false,
  }));
}

export function setConnection(vm: ViewModel, state: ConnectionState): ViewModel {
  return { ...vm, connection: state };
}

export function apply(vm: ViewModel, msg: ServerMessage): ViewModel {
  switch (msg.type) {
    case "Welcome": {
      const config = msg.payload.config;
      return {
        ...vm,
        connection: "connected",
        playerId: msg.payload.playerId,
        config,
        boards: boardsFromConfig(config),
      };
    }
    case "StateSnapshot":
      return applySnapshot(vm, msg.payload.tick, msg.payload.boards);
    case "EventFrame": {
      let next = vm;
      for (const event of msg.payload.events) {
        next = applyEvent(next, event);
      }
      return next;
    }
    case "RuleNotice":
      return {
        ...vm,
        notices: [...vm.notices, {
          ruleId: msg.payload.ruleId,
          text: msg.payload.text,
          tick: vm.tick,
        }],
      };
    case "Error":
      return {
        ...vm,
        toasts: [...vm.toasts, {
          code: msg.payload.code,
          message: msg.payload.message,
        }].slice(-MAX_TOASTS),
      };
  }
}

function applySnapshot(vm: ViewModel, tick: number,
                       boards: BoardSnapshot[]): ViewModel {
  if (vm.config === null) return vm; // snapshots are meaningless pre-Welcome
  const { width, height } = vm.config.board;
  const byId = new Map(boards.map((b) => [b.gameId, b]));
  return {
    ...vm,
    tick,
    boards: vm.boards.map((board) => {
      const snap = byId.get(board.gameId);
      if (!snap) return board;
      return {
        ...board,
        grid: expandGrid(snap.grid, width, height),
        score: snap.score,
        level: snap.level,
        totalLines: snap.totalLines,
        nextPieceId: snap.nextPieceId,
        status: snap.status,
        own: snap.own,
        selected: snap.selected,
        frozen: snap.frozen,
      };
    }),
  };
}

// Between snapshots, event frames keep the scoreboard and selection state
// fresh; grids wait for the next snapshot (thin client, no simulation).
function applyEvent(vm: ViewModel, event: SessionEventJson): ViewModel {
  const tick = Math.max(vm.tick, event.tick);
  const p = event.payload;
  switch (event.kind) {
    case "ScoreChanged":
      return withBoard(vm, p.gameId as string, (b) => ({
        ...b, score: p.score as number,
      }), tick);
    case "LinesCleared":
      return withBoard(vm, p.gameId as string, (b) => ({
        ...b, totalLines: b.totalLines + (p.count as number),
      }), tick);
    case "BoardSelected": {
      if (p.playerId !== vm.playerId) return { ...vm, tick };
      const selectedId = p.gameId as string;
      return {
        ...vm,
        tick,
        boards: vm.boards.map((b) => ({
          ...b,
          selected: b.own ? b.gameId === selectedId : b.selected,
        })),
      };
    }
    case "Freeze":
      return withBoard(vm, p.gameId as string, (b) => ({
        ...b, frozen: true, status: "frozen",
      }), tick);
    case "Unfreeze":
      return withBoard(vm, p.gameId as string, (b) => ({
        ...b, frozen: false, status: "active",
      }), tick);
    case "GameOver":
      return withBoard(vm, p.gameId as string, (b) => ({
        ...b, status: "over", score: p.finalScore as number,
      }), tick);
    case "SessionEnd":
      return { ...vm, tick, sessionOver: true };
    default:
      return { ...vm, tick };
  }
}

function withBoard(vm: ViewModel, gameId: string,
                   update: (b: BoardView) => BoardView, tick: number): ViewModel {
  return {
    ...vm,
    tick,
    boards: vm.boards.map((b) => (b.gameId === gameId ? update(b) : b)),
  };
}

export function selectedBoard(vm: ViewModel): BoardView | null {
  return vm.boards.find((b) => b.own && b.selected) ?? null;
}
