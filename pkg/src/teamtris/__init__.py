"""teamtris: a multi-board Tetris platform where machine agents place pieces
and humans steer their learning with reward keystrokes across many
simultaneous games.

Subsystems: `engine` (deterministic game core), `learner` (human-reward
model), `team` (topology and feedback routing), `rules` (hidden rules and
regime schedule), `session` (lockstep orchestrator), `protocol`/`server`
(wire format and WebSocket service), `eventlog`/`replay` (event-sourced
persistence), `harness` (headless experiments).
"""

__version__ = "0.1.0"
