// Canvas renderer: a grid of boards with the selection highlighted, scores
// and next pieces in each header, disclosed-rule notices down the side, and
// a full-screen reconnect state when the socket drops.

import { CellColor, PieceShape } from "./protocol.js";
import { BoardView, ViewModel } from "./state.js";

const CELL = 14;
const HEADER = 34;
const PAD = 12;
const NOTICE_PANEL = 260;

const COLOR_HEX: Record<string, string> = {
  yellow: "#f0d000",
  cyan: "#00c0d0",
  purple: "#9b30d9",
  green: "#21b14c",
  red: "#d92e2e",
  blue: "#2e5bd9",
  orange: "#e07b1f",
};

function cellColor(color: CellColor): string {
  if (color === null) return "#14141c";
  if (color in COLOR_HEX) return COLOR_HEX[color];
  // customN novel-piece colors get a stable fallback palette
  const n = parseInt(color.replace("custom", ""), 10) || 0;
  return ["#c9c9c9", "#7a5c42", "#4f7a6a", "#8a4f7a"][n % 4];
}

export class Renderer {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(vm: ViewModel): void {
    const ctx = this.ctx;
    if (vm.connection !== "connected" || vm.config === null) {
      this.renderDisconnected(vm);
      return;
    }
    const { width, height } = vm.config.board;
    const boardW = width * CELL;
    const boardH = height * CELL + HEADER;
    const columns = Math.min(vm.boards.length, 6);
    const rows = Math.ceil(vm.boards.length / columns);
    this.canvas.width = columns * (boardW + PAD) + PAD + NOTICE_PANEL;
    this.canvas.height = Math.max(rows * (boardH + PAD) + PAD, 420);

    ctx.fillStyle = "#0a0a10";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    vm.boards.forEach((board, i) => {
      const x = PAD + (i % columns) * (boardW + PAD);
      const y = PAD + Math.floor(i / columns) * (boardH + PAD);
      this.renderBoard(board, x, y, width, height, vm);
    });
    this.renderSidePanel(vm, columns * (boardW + PAD) + PAD);
  }

  private renderBoard(board: BoardView, x: number, y: number,
                      width: number, height: number, vm: ViewModel): void {
    const ctx = this.ctx;
    const boardW = width * CELL;

    ctx.fillStyle = board.own ? "#e8e8f0" : "#8a8a98";
    ctx.font = "12px monospace";
    const owner = board.playerId === null ? "dependent (view only)" : board.playerId;
    ctx.fillText(`${board.agentId} · ${owner}`, x, y + 12);
    ctx.fillText(`score ${board.score}  lvl ${board.level}  next ${board.nextPieceId ?? "-"}`,
                 x, y + 26);

    const top = y + HEADER;
    for (let r = 0; r < height; r++) {
      for (let c = 0; c < width; c++) {
        ctx.fillStyle = cellColor(board.grid[r]?.[c] ?? null);
        ctx.fillRect(x + c * CELL, top + r * CELL, CELL - 1, CELL - 1);
      }
    }

    if (board.frozen) {
      ctx.fillStyle = "rgba(120, 180, 255, 0.25)";
      ctx.fillRect(x, top, boardW, height * CELL);
      ctx.fillStyle = "#bcd6ff";
      ctx.fillText("FROZEN", x + boardW / 2 - 22, top + 20);
    }
    if (board.status === "over") {
      ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
      ctx.fillRect(x, top, boardW, height * CELL);
      ctx.fillStyle = "#ffffff";
      ctx.fillText("GAME OVER", x + boardW / 2 - 34, top + height * CELL / 2);
    }

    if (board.own && board.selected) {
      ctx.strokeStyle = "#ffd24a";
      ctx.lineWidth = 3;
      ctx.strokeRect(x - 3, y - 3, boardW + 6, height * CELL + HEADER + 6);
    } else if (!board.own) {
      ctx.strokeStyle = "#3a3a48";
      ctx.lineWidth = 1;
      ctx.strokeRect(x - 2, y - 2, boardW + 4, height * CELL + HEADER + 4);
    }
    void vm;
  }

  private renderSidePanel(vm: ViewModel, x: number): void {
    const ctx = this.ctx;
    ctx.fillStyle = "#e8e8f0";
    ctx.font = "13px monospace";
    let y = PAD + 14;
    ctx.fillText(`player ${vm.playerId ?? "?"}   tick ${vm.tick}`, x, y);
    y += 18;
    if (vm.config?.mode.superhuman) {
      ctx.fillText(`freeze budget: ${vm.config.freezeBudgetTicks ?? "∞"} ticks`, x, y);
      y += 18;
    }
    ctx.fillText("keys: 0-9 select · Enter reward · Space freeze", x, y);
    y += 26;

    if (vm.notices.length > 0) {
      ctx.fillStyle = "#ffd24a";
      ctx.fillText("rule notices", x, y);
      y += 16;
      ctx.fillStyle = "#e8e8f0";
      for (const notice of vm.notices.slice(-12)) {
        ctx.fillText(`t${notice.tick} ${notice.text}`.slice(0, 38), x, y);
        y += 14;
      }
      y += 10;
    }
    if (vm.toasts.length > 0) {
      ctx.fillStyle = "#ff7a7a";
      for (const toast of vm.toasts) {
        ctx.fillText(`${toast.code}: ${toast.message}`.slice(0, 38), x, y);
        y += 14;
      }
    }
    if (vm.sessionOver) {
      ctx.fillStyle = "#ffd24a";
      ctx.fillText("SESSION ENDED", x, y + 10);
    }
  }

  private renderDisconnected(vm: ViewModel): void {
    const ctx = this.ctx;
    this.canvas.width = Math.max(this.canvas.width, 640);
    this.canvas.height = Math.max(this.canvas.height, 420);
    ctx.fillStyle = "#0a0a10";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.fillStyle = "#e8e8f0";
    ctx.font = "16px monospace";
    const text = vm.connection === "connecting"
      ? "connecting…" : "connection lost — retrying…";
    ctx.fillText(text, this.canvas.width / 2 - 80, this.canvas.height / 2);
  }
}

export function pieceLegend(pieces: PieceShape[]): string {
  return pieces.map((p) => `${p.id}:${p.color}`).join("  ");
}
