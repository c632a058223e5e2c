#include "rapid/grid_world.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rapid/errors.hpp"

namespace rapid::grid {

bool Cell::can_overlap() const {
  switch (type) {
    case Object::kEmpty:
    case Object::kFloor:
    case Object::kGoal:
    case Object::kLava:
      return true;
    case Object::kDoor:
      return state == DoorState::kOpen;
    default:
      return false;
  }
}

bool Cell::can_pickup() const {
  return type == Object::kKey || type == Object::kBall || type == Object::kBox;
}

bool Cell::see_behind() const {
  if (type == Object::kWall) return false;
  if (type == Object::kDoor) return state == DoorState::kOpen;
  return true;
}

std::array<std::uint8_t, 3> Cell::encode() const {
  if (type == Object::kEmpty) return {static_cast<std::uint8_t>(Object::kEmpty), 0, 0};
  const auto state_code = type == Object::kDoor ? static_cast<std::uint8_t>(state) : std::uint8_t{0};
  return {static_cast<std::uint8_t>(type), static_cast<std::uint8_t>(color), state_code};
}

Cell make_wall() { return {Object::kWall, Color::kGrey, DoorState::kOpen}; }
Cell make_door(Color color, DoorState state) { return {Object::kDoor, color, state}; }
Cell make_goal() { return {Object::kGoal, Color::kGreen, DoorState::kOpen}; }
Cell make_key(Color color) { return {Object::kKey, color, DoorState::kOpen}; }
Cell make_ball(Color color) { return {Object::kBall, color, DoorState::kOpen}; }

Pos dir_vec(int dir) {
  static constexpr Pos kDirs[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return kDirs[dir & 3];
}

Pos GridWorld::front() const {
  const Pos d = dir_vec(dir);
  return {agent.x + d.x, agent.y + d.y};
}

GridStep step_world(GridWorld& world, GridAction action) {
  if (world.done) throw ContractViolation("step_world: episode already finished");

  ++world.step_count;
  GridStep out;
  const auto success_reward = [&world] {
    return 1.0 - world.step_penalty * static_cast<double>(world.step_count) / world.max_steps;
  };

  const Pos fwd = world.front();
  const bool fwd_ok = world.in_bounds(fwd);

  switch (action) {
    case GridAction::kLeft:
      world.dir = (world.dir + 3) % 4;
      break;
    case GridAction::kRight:
      world.dir = (world.dir + 1) % 4;
      break;
    case GridAction::kForward:
      if (fwd_ok && world.at(fwd).can_overlap()) {
        world.agent = fwd;
        if (world.at(fwd).type == Object::kGoal && world.task == Task::kReachGoal) {
          out.done = true;
          out.reward = success_reward();
        }
      }
      break;
    case GridAction::kPickup:
      if (fwd_ok && !world.carrying && world.at(fwd).can_pickup()) {
        world.carrying = world.at(fwd);
        world.at(fwd) = Cell{};
        if (world.task == Task::kPickupBall && world.carrying->type == Object::kBall) {
          out.done = true;
          out.reward = success_reward();
        }
      }
      break;
    case GridAction::kDrop:
      if (fwd_ok && world.carrying && world.at(fwd).is_empty()) {
        world.at(fwd) = *world.carrying;
        world.carrying.reset();
      }
      break;
    case GridAction::kToggle:
      if (fwd_ok && world.at(fwd).type == Object::kDoor) {
        Cell& door = world.at(fwd);
        if (door.state == DoorState::kLocked) {
          if (world.carrying && world.carrying->type == Object::kKey &&
              world.carrying->color == door.color) {
            door.state = DoorState::kOpen;
          }
        } else {
          door.state = door.state == DoorState::kOpen ? DoorState::kClosed : DoorState::kOpen;
        }
      }
      break;
    case GridAction::kDone:
      break;
  }

  if (world.step_count >= world.max_steps) out.done = true;
  world.done = out.done;
  return out;
}

namespace {

using View = std::array<std::array<Cell, kViewSize>, kViewSize>;  // [x][y]

View rotate_left(const View& v) {
  View r;
  for (int i = 0; i < kViewSize; ++i)
    for (int j = 0; j < kViewSize; ++j) r[j][kViewSize - 1 - i] = v[i][j];
  return r;
}

using Mask = std::array<std::array<bool, kViewSize>, kViewSize>;

// Forward sweep from the agent row upward; a cell that blocks sight does not
// propagate visibility to its neighbours.
Mask process_vis(const View& v, Pos agent) {
  Mask mask{};
  mask[agent.x][agent.y] = true;
  for (int j = kViewSize - 1; j >= 0; --j) {
    for (int i = 0; i < kViewSize - 1; ++i) {
      if (!mask[i][j] || !v[i][j].see_behind()) continue;
      mask[i + 1][j] = true;
      if (j > 0) {
        mask[i + 1][j - 1] = true;
        mask[i][j - 1] = true;
      }
    }
    for (int i = kViewSize - 1; i >= 1; --i) {
      if (!mask[i][j] || !v[i][j].see_behind()) continue;
      mask[i - 1][j] = true;
      if (j > 0) {
        mask[i - 1][j - 1] = true;
        mask[i][j - 1] = true;
      }
    }
  }
  return mask;
}

}  // namespace

GridObservation encode_observation(const GridWorld& world) {
  int top_x = 0;
  int top_y = 0;
  switch (world.dir) {
    case 0:
      top_x = world.agent.x;
      top_y = world.agent.y - kViewSize / 2;
      break;
    case 1:
      top_x = world.agent.x - kViewSize / 2;
      top_y = world.agent.y;
      break;
    case 2:
      top_x = world.agent.x - kViewSize + 1;
      top_y = world.agent.y - kViewSize / 2;
      break;
    default:
      top_x = world.agent.x - kViewSize / 2;
      top_y = world.agent.y - kViewSize + 1;
      break;
  }

  View view;
  for (int i = 0; i < kViewSize; ++i) {
    for (int j = 0; j < kViewSize; ++j) {
      const Pos p{top_x + i, top_y + j};
      view[i][j] = world.in_bounds(p) ? world.at(p) : make_wall();
    }
  }
  for (int r = 0; r < world.dir + 1; ++r) view = rotate_left(view);

  const Pos eye{kViewSize / 2, kViewSize - 1};
  const Mask mask = process_vis(view, eye);
  view[eye.x][eye.y] = world.carrying ? *world.carrying : Cell{};

  GridObservation obs{};
  for (int i = 0; i < kViewSize; ++i) {
    for (int j = 0; j < kViewSize; ++j) {
      if (!mask[i][j]) continue;
      const auto code = view[i][j].encode();
      const int base = (i * kViewSize + j) * 3;
      obs[base] = code[0];
      obs[base + 1] = code[1];
      obs[base + 2] = code[2];
    }
  }
  return obs;
}

std::string render_ascii(const GridWorld& world) {
  std::string out;
  out.reserve(static_cast<std::size_t>((world.width + 1) * world.height));
  for (int y = 0; y < world.height; ++y) {
    for (int x = 0; x < world.width; ++x) {
      const Pos p{x, y};
      if (p == world.agent) {
        out.push_back(">v<^"[world.dir & 3]);
        continue;
      }
      const Cell& c = world.at(p);
      char ch = '?';
      switch (c.type) {
        case Object::kEmpty: ch = '.'; break;
        case Object::kWall: ch = '#'; break;
        case Object::kGoal: ch = 'G'; break;
        case Object::kKey: ch = 'K'; break;
        case Object::kBall: ch = 'B'; break;
        case Object::kBox: ch = 'X'; break;
        case Object::kFloor: ch = '_'; break;
        case Object::kLava: ch = '~'; break;
        case Object::kDoor:
          ch = c.state == DoorState::kOpen ? 'd' : (c.state == DoorState::kClosed ? 'D' : 'L');
          break;
        default: break;
      }
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// MultiRoom

namespace {

struct Room {
  Pos top;
  Pos size;
  Pos entry_door;
};

class MultiRoomBuilder {
 public:
  MultiRoomBuilder(int width, int height, Rng& rng) : width_(width), height_(height), rng_(rng) {}

  // Recursive random placement: each new room is attached to a wall of the
  // previous one through its entry door. Returns false when this room does
  // not fit; a successful room may still end the chain early.
  bool place_room(int num_left, std::vector<Room>& rooms, int min_sz, int max_sz, int entry_wall,
                  Pos entry_door) {
    const int size_x = static_cast<int>(rng_.uniform_int(min_sz, max_sz + 1));
    const int size_y = static_cast<int>(rng_.uniform_int(min_sz, max_sz + 1));
    int top_x = 0;
    int top_y = 0;
    if (rooms.empty()) {
      top_x = entry_door.x;
      top_y = entry_door.y;
    } else if (entry_wall == 0) {
      top_x = entry_door.x - size_x + 1;
      top_y = rand_range(entry_door.y - size_y + 2, entry_door.y);
    } else if (entry_wall == 1) {
      top_x = rand_range(entry_door.x - size_x + 2, entry_door.x);
      top_y = entry_door.y - size_y + 1;
    } else if (entry_wall == 2) {
      top_x = entry_door.x;
      top_y = rand_range(entry_door.y - size_y + 2, entry_door.y);
    } else {
      top_x = rand_range(entry_door.x - size_x + 2, entry_door.x);
      top_y = entry_door.y;
    }

    if (top_x < 0 || top_y < 0) return false;
    if (top_x + size_x > width_ || top_y + size_y >= height_) return false;

    // The last room shares the entry wall with this one and is exempt.
    for (std::size_t r = 0; r + 1 < rooms.size(); ++r) {
      const Room& o = rooms[r];
      const bool non_overlap = top_x + size_x < o.top.x || o.top.x + o.size.x <= top_x ||
                               top_y + size_y < o.top.y || o.top.y + o.size.y <= top_y;
      if (!non_overlap) return false;
    }

    rooms.push_back(Room{{top_x, top_y}, {size_x, size_y}, entry_door});
    if (num_left == 1) return true;

    for (int attempt = 0; attempt < 8; ++attempt) {
      std::vector<int> walls;
      for (int w = 0; w < 4; ++w)
        if (w != entry_wall) walls.push_back(w);
      const int exit_wall = walls[static_cast<std::size_t>(rng_.uniform_int(0, 3))];
      const int next_entry_wall = (exit_wall + 2) % 4;
      Pos exit_door;
      if (exit_wall == 0) {
        exit_door = {top_x + size_x - 1, top_y + rand_range(1, size_y - 1)};
      } else if (exit_wall == 1) {
        exit_door = {top_x + rand_range(1, size_x - 1), top_y + size_y - 1};
      } else if (exit_wall == 2) {
        exit_door = {top_x, top_y + rand_range(1, size_y - 1)};
      } else {
        exit_door = {top_x + rand_range(1, size_x - 1), top_y};
      }
      if (place_room(num_left - 1, rooms, min_sz, max_sz, next_entry_wall, exit_door)) break;
    }
    return true;
  }

  int rand_range(int lo, int hi) { return static_cast<int>(rng_.uniform_int(lo, hi)); }

 private:
  int width_;
  int height_;
  Rng& rng_;
};

Pos random_free_cell(const GridWorld& world, Pos top, Pos size, Rng& rng, std::uint64_t seed) {
  for (int tries = 0; tries < 10000; ++tries) {
    const Pos p{static_cast<int>(rng.uniform_int(top.x, top.x + size.x)),
                static_cast<int>(rng.uniform_int(top.y, top.y + size.y))};
    if (!world.at(p).is_empty() || p == world.agent) continue;
    return p;
  }
  throw GenerationError("no free cell for object placement (seed " + std::to_string(seed) + ")");
}

}  // namespace

GridWorld generate_multiroom(int n_rooms, int max_room_size, std::uint64_t seed) {
  constexpr int kGridSize = 25;
  constexpr int kMaxAttempts = 2000;
  Rng rng(seed);
  MultiRoomBuilder builder(kGridSize, kGridSize, rng);
  const int min_sz = std::min(4, max_room_size);

  std::vector<Room> rooms;
  for (int attempt = 0; static_cast<int>(rooms.size()) < n_rooms; ++attempt) {
    if (attempt >= kMaxAttempts) {
      throw GenerationError("MultiRoom-N" + std::to_string(n_rooms) + "-S" +
                            std::to_string(max_room_size) + ": could not place all rooms (seed " +
                            std::to_string(seed) + ")");
    }
    std::vector<Room> candidate;
    const Pos entry{builder.rand_range(0, kGridSize - 2), builder.rand_range(0, kGridSize - 2)};
    builder.place_room(n_rooms, candidate, min_sz, max_room_size, 2, entry);
    if (candidate.size() > rooms.size()) rooms = std::move(candidate);
  }

  GridWorld world(kGridSize, kGridSize);
  world.task = Task::kReachGoal;
  std::optional<Color> prev_color;
  for (std::size_t idx = 0; idx < rooms.size(); ++idx) {
    const Room& room = rooms[idx];
    for (int i = 0; i < room.size.x; ++i) {
      world.at({room.top.x + i, room.top.y}) = make_wall();
      world.at({room.top.x + i, room.top.y + room.size.y - 1}) = make_wall();
    }
    for (int j = 0; j < room.size.y; ++j) {
      world.at({room.top.x, room.top.y + j}) = make_wall();
      world.at({room.top.x + room.size.x - 1, room.top.y + j}) = make_wall();
    }
    if (idx > 0) {
      std::vector<Color> colors;
      for (int c = 0; c < kNumColors; ++c) {
        if (prev_color && static_cast<int>(*prev_color) == c) continue;
        colors.push_back(static_cast<Color>(c));
      }
      const Color color = colors[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(colors.size())))];
      world.at(room.entry_door) = make_door(color, DoorState::kClosed);
      prev_color = color;
    }
  }

  // Interior cells only; walls are never free.
  const Room& first = rooms.front();
  world.agent = {-1, -1};
  world.agent = random_free_cell(world, {first.top.x + 1, first.top.y + 1},
                                 {first.size.x - 2, first.size.y - 2}, rng, seed);
  world.dir = static_cast<int>(rng.uniform_int(0, 4));
  const Room& last = rooms.back();
  const Pos goal = random_free_cell(world, {last.top.x + 1, last.top.y + 1},
                                    {last.size.x - 2, last.size.y - 2}, rng, seed);
  world.at(goal) = make_goal();
  return world;
}

// ---------------------------------------------------------------------------
// KeyCorridor

namespace {

struct GridRoom {
  Pos top;
  int size = 0;
  std::array<std::optional<Pos>, 4> door_pos;  // right, down, left, up
  std::array<bool, 4> connected{};
  bool locked = false;
};

class RoomGrid {
 public:
  RoomGrid(int room_size, int n_cols, int n_rows, Rng& rng)
      : room_size_(room_size),
        n_cols_(n_cols),
        n_rows_(n_rows),
        world_((room_size - 1) * n_cols + 1, (room_size - 1) * n_rows + 1),
        rooms_(static_cast<std::size_t>(n_cols * n_rows)),
        rng_(rng) {
    for (int j = 0; j < n_rows; ++j) {
      for (int i = 0; i < n_cols; ++i) {
        GridRoom& room = get(i, j);
        room.top = {i * (room_size - 1), j * (room_size - 1)};
        room.size = room_size;
        for (int k = 0; k < room_size; ++k) {
          world_.at({room.top.x + k, room.top.y}) = make_wall();
          world_.at({room.top.x + k, room.top.y + room_size - 1}) = make_wall();
          world_.at({room.top.x, room.top.y + k}) = make_wall();
          world_.at({room.top.x + room_size - 1, room.top.y + k}) = make_wall();
        }
      }
    }
    // One candidate door position per shared wall.
    for (int j = 0; j < n_rows; ++j) {
      for (int i = 0; i < n_cols; ++i) {
        GridRoom& room = get(i, j);
        const Pos t = room.top;
        if (i + 1 < n_cols) {
          const Pos p{t.x + room_size - 1, rand_range(t.y + 1, t.y + room_size - 1)};
          room.door_pos[0] = p;
          get(i + 1, j).door_pos[2] = p;
        }
        if (j + 1 < n_rows) {
          const Pos p{rand_range(t.x + 1, t.x + room_size - 1), t.y + room_size - 1};
          room.door_pos[1] = p;
          get(i, j + 1).door_pos[3] = p;
        }
      }
    }
  }

  GridRoom& get(int i, int j) { return rooms_[static_cast<std::size_t>(j * n_cols_ + i)]; }

  std::pair<int, int> neighbor(int i, int j, int k) const {
    const Pos d = dir_vec(k);
    return {i + d.x, j + d.y};
  }

  int rand_range(int lo, int hi) { return static_cast<int>(rng_.uniform_int(lo, hi)); }

  Color random_color() { return static_cast<Color>(rng_.uniform_int(0, kNumColors)); }

  Cell add_door(int i, int j, int k, Color color, bool locked) {
    GridRoom& room = get(i, j);
    if (locked) room.locked = true;
    const Cell door = make_door(color, locked ? DoorState::kLocked : DoorState::kClosed);
    world_.at(*room.door_pos[k]) = door;
    room.connected[k] = true;
    const auto [ni, nj] = neighbor(i, j, k);
    get(ni, nj).connected[(k + 2) % 4] = true;
    return door;
  }

  void remove_wall(int i, int j, int k) {
    GridRoom& room = get(i, j);
    const Pos t = room.top;
    const int s = room.size;
    for (int q = 1; q < s - 1; ++q) {
      Pos p;
      switch (k) {
        case 0: p = {t.x + s - 1, t.y + q}; break;
        case 1: p = {t.x + q, t.y + s - 1}; break;
        case 2: p = {t.x, t.y + q}; break;
        default: p = {t.x + q, t.y}; break;
      }
      world_.at(p) = Cell{};
    }
    room.connected[k] = true;
    const auto [ni, nj] = neighbor(i, j, k);
    get(ni, nj).connected[(k + 2) % 4] = true;
  }

  Pos place_in_room(int i, int j, const Cell& obj, std::uint64_t seed) {
    const GridRoom& room = get(i, j);
    const Pos p = random_free_cell(world_, {room.top.x + 1, room.top.y + 1},
                                   {room.size - 2, room.size - 2}, rng_, seed);
    world_.at(p) = obj;
    return p;
  }

  void place_agent(int i, int j, std::uint64_t seed) {
    const GridRoom& room = get(i, j);
    world_.agent = {-1, -1};
    world_.agent = random_free_cell(world_, {room.top.x + 1, room.top.y + 1},
                                    {room.size - 2, room.size - 2}, rng_, seed);
    world_.dir = static_cast<int>(rng_.uniform_int(0, 4));
  }

  // Adds random unlocked doors until every room is reachable from the
  // agent's room.
  void connect_all(std::uint64_t seed) {
    const int start_i = world_.agent.x / (room_size_ - 1);
    const int start_j = world_.agent.y / (room_size_ - 1);
    constexpr int kMaxIters = 5000;
    for (int iter = 0;; ++iter) {
      if (iter > kMaxIters) {
        throw GenerationError("KeyCorridor: connect_all exceeded iteration budget (seed " +
                              std::to_string(seed) + ")");
      }
      if (reachable_count(start_i, start_j) == n_cols_ * n_rows_) return;
      const int i = rand_range(0, n_cols_);
      const int j = rand_range(0, n_rows_);
      const int k = rand_range(0, 4);
      GridRoom& room = get(i, j);
      if (!room.door_pos[k] || room.connected[k]) continue;
      const auto [ni, nj] = neighbor(i, j, k);
      if (room.locked || get(ni, nj).locked) continue;
      add_door(i, j, k, random_color(), false);
    }
  }

  GridWorld take() { return std::move(world_); }
  int n_rows() const { return n_rows_; }

 private:
  int reachable_count(int si, int sj) {
    std::vector<char> seen(rooms_.size(), 0);
    std::vector<std::pair<int, int>> stack{{si, sj}};
    int count = 0;
    while (!stack.empty()) {
      const auto [i, j] = stack.back();
      stack.pop_back();
      char& s = seen[static_cast<std::size_t>(j * n_cols_ + i)];
      if (s) continue;
      s = 1;
      ++count;
      for (int k = 0; k < 4; ++k) {
        if (get(i, j).connected[k]) stack.push_back(neighbor(i, j, k));
      }
    }
    return count;
  }

  int room_size_;
  int n_cols_;
  int n_rows_;
  GridWorld world_;
  std::vector<GridRoom> rooms_;
  Rng& rng_;
};

}  // namespace

GridWorld generate_keycorridor(int room_size, int n_rows, std::uint64_t seed) {
  Rng rng(seed);
  RoomGrid rg(room_size, 3, n_rows, rng);

  // Middle column forms the corridor.
  for (int j = 1; j < n_rows; ++j) rg.remove_wall(1, j, 3);

  const int target_row = rg.rand_range(0, n_rows);
  const Cell door = rg.add_door(2, target_row, 2, rg.random_color(), true);
  rg.place_in_room(2, target_row, make_ball(rg.random_color()), seed);
  rg.place_in_room(0, rg.rand_range(0, n_rows), make_key(door.color), seed);
  rg.place_agent(1, n_rows / 2, seed);
  rg.connect_all(seed);

  GridWorld world = rg.take();
  world.task = Task::kPickupBall;
  return world;
}

}  // namespace rapid::grid
