// Thin-client replay: feeding a recorded server transcript through the
// reducer must land on exactly the final state the server reported, and a
// second replay must reproduce it bit for bit.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import { decode } from "../src/protocol.js";
import { ViewModel, apply, initialViewModel, selectedBoard } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "transcript.json"), "utf-8"));

interface ExpectedBoard {
  gameId: string;
  score: number;
  level: number;
  totalLines: number;
  status: string;
  frozen: boolean;
  own: boolean;
  selected: boolean;
  filledCells: number;
  nextPieceId: string;
}

function replay(frames: string[]): ViewModel {
  let vm = initialViewModel();
  for (const frame of frames) {
    const msg = decode(frame);
    expect(msg).not.toBeNull();
    vm = apply(vm, msg!);
  }
  return vm;
}

function filledCells(vm: ViewModel, gameId: string): number {
  const board = vm.boards.find((b) => b.gameId === gameId)!;
  let n = 0;
  for (const row of board.grid) for (const cell of row) if (cell !== null) n++;
  return n;
}

describe.each(Object.keys(fixture.players))("transcript replay: %s", (playerId) => {
  const { frames, expected } = fixture.players[playerId];

  it("reaches the server's final state", () => {
    const vm = replay(frames);
    expect(vm.playerId).toBe(expected.playerId);
    expect(vm.tick).toBe(expected.tick);
    expect(vm.connection).toBe("connected");
    for (const want of expected.boards as ExpectedBoard[]) {
      const board = vm.boards.find((b) => b.gameId === want.gameId);
      expect(board, want.gameId).toBeDefined();
      expect(board!.score).toBe(want.score);
      expect(board!.level).toBe(want.level);
      expect(board!.totalLines).toBe(want.totalLines);
      expect(board!.status).toBe(want.status);
      expect(board!.frozen).toBe(want.frozen);
      expect(board!.own).toBe(want.own);
      expect(board!.selected).toBe(want.selected);
      expect(board!.nextPieceId).toBe(want.nextPieceId);
      expect(filledCells(vm, want.gameId)).toBe(want.filledCells);
    }
  });

  it("collects exactly the notices addressed to this player", () => {
    const vm = replay(frames);
    expect(vm.notices.length).toBe(expected.noticeCount);
    const ruleIds = [...new Set(vm.notices.map((n) => n.ruleId))].sort();
    expect(ruleIds).toEqual(expected.noticeRuleIds);
  });

  it("surfaces server errors as toasts", () => {
    const vm = replay(frames);
    expect(vm.toasts.map((t) => t.code)).toEqual(expected.toastCodes);
  });

  it("keeps exactly one own board selected", () => {
    const vm = replay(frames);
    const selected = vm.boards.filter((b) => b.own && b.selected);
    expect(selected.length).toBe(1);
    expect(selectedBoard(vm)).toBe(selected[0]);
  });

  it("is deterministic across replays", () => {
    expect(replay(frames)).toEqual(replay(frames));
  });
});

describe("reducer safety", () => {
  it("ignores snapshots before Welcome", () => {
    const vm = apply(initialViewModel(), {
      type: "StateSnapshot",
      payload: { tick: 5, boards: [] },
    });
    expect(vm.boards).toEqual([]);
    expect(vm.tick).toBe(0);
  });

  it("caps error toasts", () => {
    let vm = initialViewModel();
    for (let i = 0; i < 9; i++) {
      vm = apply(vm, { type: "Error",
                       payload: { code: `c${i}`, message: "m" } });
    }
    expect(vm.toasts.length).toBe(5);
    expect(vm.toasts[4].code).toBe("c8");
  });
});
