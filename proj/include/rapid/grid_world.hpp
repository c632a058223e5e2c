#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rapid/env.hpp"
#include "rapid/rng.hpp"

namespace rapid::grid {

// Integer codes follow the MiniGrid compact encoding.
enum class Object : std::uint8_t {
  kUnseen = 0,
  kEmpty = 1,
  kWall = 2,
  kFloor = 3,
  kDoor = 4,
  kKey = 5,
  kBall = 6,
  kBox = 7,
  kGoal = 8,
  kLava = 9,
  kAgent = 10,
};

enum class Color : std::uint8_t { kRed = 0, kGreen, kBlue, kPurple, kYellow, kGrey };
inline constexpr int kNumColors = 6;

enum class DoorState : std::uint8_t { kOpen = 0, kClosed = 1, kLocked = 2 };

enum class GridAction : int { kLeft = 0, kRight, kForward, kPickup, kDrop, kToggle, kDone };
inline constexpr int kNumActions = 7;

inline constexpr int kViewSize = 7;
inline constexpr int kObsSize = kViewSize * kViewSize * 3;
inline constexpr int kMaxObject = 10;
inline constexpr int kMaxColor = 5;
inline constexpr int kMaxState = 2;

struct Cell {
  Object type = Object::kEmpty;
  Color color = Color::kRed;
  DoorState state = DoorState::kOpen;

  bool is_empty() const { return type == Object::kEmpty; }
  bool can_overlap() const;
  bool can_pickup() const;
  bool see_behind() const;
  std::array<std::uint8_t, 3> encode() const;

  friend bool operator==(const Cell&, const Cell&) = default;
};

Cell make_wall();
Cell make_door(Color color, DoorState state);
Cell make_goal();
Cell make_key(Color color);
Cell make_ball(Color color);

struct Pos {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pos&, const Pos&) = default;
};

enum class Task { kReachGoal, kPickupBall };

// Full world state of one grid episode. Copyable value type.
struct GridWorld {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;
  Pos agent;
  int dir = 0;  // 0 right, 1 down, 2 left, 3 up
  std::optional<Cell> carrying;
  Task task = Task::kReachGoal;
  int step_count = 0;
  int max_steps = 1;
  double step_penalty = 0.9;
  bool done = false;

  GridWorld() = default;
  GridWorld(int w, int h) : width(w), height(h), cells(static_cast<std::size_t>(w * h)) {}

  bool in_bounds(Pos p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
  Cell& at(Pos p) { return cells[static_cast<std::size_t>(p.y * width + p.x)]; }
  const Cell& at(Pos p) const { return cells[static_cast<std::size_t>(p.y * width + p.x)]; }
  Pos front() const;
};

Pos dir_vec(int dir);

struct GridStep {
  double reward = 0.0;
  bool done = false;
};

// Applies one action. Illegal actions consume a timestep and change nothing.
// Throws ContractViolation when the episode is already done.
GridStep step_world(GridWorld& world, GridAction action);

using GridObservation = std::array<std::uint8_t, kObsSize>;

// Egocentric 7x7 partial view, rotated so the agent faces up with the agent
// at (3, 6); cells hidden behind walls or closed doors are encoded unseen.
// Flattened as index (x * 7 + y) * 3 + channel.
GridObservation encode_observation(const GridWorld& world);

// Plain-text snapshot of the full grid, one character per cell:
//   '#' wall   '.' empty   'G' goal   'K' key   'B' ball   'X' box
//   'D' closed door   'd' open door   'L' locked door
//   '>' 'v' '<' '^' agent facing right/down/left/up
std::string render_ascii(const GridWorld& world);

// Layout generators. Throw GenerationError naming the seed after bounded
// retries. max_steps and step_penalty are left at their defaults for the
// caller to set.
GridWorld generate_multiroom(int n_rooms, int max_room_size, std::uint64_t seed);
GridWorld generate_keycorridor(int room_size, int n_rows, std::uint64_t seed);

}  // namespace rapid::grid
