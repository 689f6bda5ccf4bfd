#pragma once

// Click collection: participant sessions with batches of ten unique images,
// timed task presentation, click acceptance and validity, target rendering
// per display mode, an append-only journal and the CSV export.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rclicks/click.hpp"
#include "rclicks/dataset.hpp"
#include "rclicks/error.hpp"
#include "rclicks/image_io.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/rng.hpp"

namespace rclicks {

enum class DisplayMode { kText, kCutout, kShiftedCutout, kSilhouette, kHighlight };

inline const char* to_string(DisplayMode m) {
  switch (m) {
    case DisplayMode::kText: return "text";
    case DisplayMode::kCutout: return "cutout";
    case DisplayMode::kShiftedCutout: return "shifted_cutout";
    case DisplayMode::kSilhouette: return "silhouette";
    case DisplayMode::kHighlight: return "highlight";
  }
  return "cutout";
}

inline DisplayMode parse_display_mode(std::string_view s) {
  if (s == "text") return DisplayMode::kText;
  if (s == "cutout") return DisplayMode::kCutout;
  if (s == "shifted_cutout") return DisplayMode::kShiftedCutout;
  if (s == "silhouette") return DisplayMode::kSilhouette;
  if (s == "highlight") return DisplayMode::kHighlight;
  fail(ErrorKind::kInvalidParameter, "unknown display mode '" + std::string(s) + "'");
}

struct PhaseTimings {
  int image_ms = 1500;
  int target_ms = 2000;
  int locked_ms = 1500;

  int total() const { return image_ms + target_ms + locked_ms; }
};

inline PhaseTimings timings_for(DisplayMode mode) {
  PhaseTimings t;
  if (mode == DisplayMode::kText) t.target_ms = 2500;
  return t;
}

inline constexpr std::int64_t kPlausibilitySlackMs = 250;
inline constexpr std::uint8_t kGray = 128;

// ---------------------------------------------------------------------------
// Target rendering
// ---------------------------------------------------------------------------

/// Contour thickness of the highlight mode in pixels.
inline int highlight_thickness(int width, int height) {
  return std::max(1, static_cast<int>(std::lround(std::sqrt(double(width) * width + double(height) * height) / 300.0)));
}

/// PNG bytes for image modes, the description for text mode.
using RenderedTarget = std::variant<std::vector<std::uint8_t>, std::string>;

inline RgbImage render_target_image(const RgbImage& image, const BinaryMask& mask, DisplayMode mode) {
  if (image.width != mask.width() || image.height != mask.height()) {
    fail(ErrorKind::kInvalidParameter, "image and mask sizes differ");
  }
  const int w = image.width, h = image.height;
  RgbImage out(w, h);
  auto copy_px = [](std::uint8_t* dst, const std::uint8_t* src) { std::copy(src, src + 3, dst); };
  switch (mode) {
    case DisplayMode::kCutout:
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (mask(x, y)) copy_px(out.at(x, y), image.at(x, y));
          else std::fill(out.at(x, y), out.at(x, y) + 3, kGray);
        }
      return out;
    case DisplayMode::kShiftedCutout: {
      std::fill(out.rgb.begin(), out.rgb.end(), kGray);
      const auto box = bounding_box(mask);
      if (!box) return out;
      for (int y = box->y0; y < box->y0 + box->height; ++y)
        for (int x = box->x0; x < box->x0 + box->width; ++x)
          if (mask(x, y)) copy_px(out.at(x - box->x0, y - box->y0), image.at(x, y));
      return out;
    }
    case DisplayMode::kSilhouette:
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) std::fill(out.at(x, y), out.at(x, y) + 3, mask(x, y) ? 255 : 0);
      return out;
    case DisplayMode::kHighlight: {
      out = image;
      if (!mask.any()) return out;
      const auto t = highlight_thickness(w, h);
      // Inner band of the mask: object pixels within t of a background pixel.
      const auto d2 = squared_distance_to(~mask, false);
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i] || d2[i] > static_cast<std::int64_t>(t) * t) continue;
        auto* p = &out.rgb[i * 3];
        p[0] = 0;
        p[1] = 255;
        p[2] = 0;
      }
      return out;
    }
    case DisplayMode::kText: break;
  }
  fail(ErrorKind::kInvalidParameter, "text mode has no image");
}

inline RenderedTarget render_target(const RgbImage& image, const BinaryMask& mask,
                                    const std::optional<std::string>& description, DisplayMode mode) {
  if (mode == DisplayMode::kText) {
    if (!description || description->empty()) fail(ErrorKind::kMissingDescription, "instance has no description");
    return *description;
  }
  return encode_png(render_target_image(image, mask, mode));
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

struct CollectInstance {
  std::string id;
  std::string dataset;
  std::string image_stem;
  std::string object_stem;
  std::filesystem::path image;
  BinaryMask mask;
  std::optional<std::string> description;
};

inline std::vector<CollectInstance> collect_instances(const Manifest& m) {
  std::vector<CollectInstance> out;
  for (const auto& e : m.entries) {
    out.push_back({e.id, m.dataset, e.image_stem, e.object_stem.empty() ? e.id : e.object_stem, e.image,
                   load_mask(e.gt), e.description});
  }
  return out;
}

/// Client-declared phase timeline in client milliseconds.
struct ClientTimeline {
  std::int64_t image_shown = 0;
  std::int64_t target_shown = 0;
  std::int64_t locked_shown = 0;
  std::int64_t clicked = 0;
};

struct TaskView {
  std::string task_id;
  std::string session_id;
  std::string instance_id;
  int index = 0;  // 1..10 within the batch
  int width = 0;
  int height = 0;
  DisplayMode mode = DisplayMode::kCutout;
  PhaseTimings timings;
};

struct ClickOutcome {
  bool accepted = false;
  bool valid = false;
  std::string reason;
  bool batch_complete = false;
  std::optional<bool> batch_valid;
};

using Clock = std::function<std::int64_t()>;

inline Clock steady_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

class CollectStore {
 public:
  CollectStore(std::vector<CollectInstance> instances, std::filesystem::path journal, Clock clock = steady_clock_ms(),
               std::uint64_t seed = 0)
      : instances_(std::move(instances)), journal_path_(std::move(journal)), clock_(std::move(clock)), rng_(seed) {
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      if (!index_.emplace(instances_[i].id, i).second) {
        fail(ErrorKind::kStartupError, "duplicate instance id '" + instances_[i].id + "'");
      }
    }
    replay();
    journal_.open(journal_path_, std::ios::app);
    if (!journal_) fail(ErrorKind::kStartupError, "cannot open journal " + journal_path_.string());
  }

  /// Starts a session of ten tasks over distinct images the participant has
  /// not seen. An empty participant id means a fresh anonymous participant.
  std::string create_session(Device device, DisplayMode mode, const std::string& participant = {}) {
    std::unique_lock lock(mutex_);
    const std::string who = participant.empty() ? "anon-" + std::to_string(sessions_.size() + 1) : participant;
    if (who.find(',') != std::string::npos || who.find('\n') != std::string::npos) {
      fail(ErrorKind::kInvalidParameter, "participant id must not contain commas or newlines");
    }
    auto& seen = seen_[who];
    std::vector<std::size_t> order(instances_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng_, i)]);
    std::vector<std::size_t> batch;
    std::set<std::string> images;
    for (std::size_t i : order) {
      const auto& inst = instances_[i];
      if (seen.count(inst.image_stem) || images.count(inst.image_stem)) continue;
      if (mode == DisplayMode::kText && !inst.description) continue;
      images.insert(inst.image_stem);
      batch.push_back(i);
      if (batch.size() == kBatchSize) break;
    }
    if (batch.size() < kBatchSize) {
      fail(ErrorKind::kConflict, "fewer than 10 unseen images left for participant '" + who + "'");
    }
    std::ostringstream id;
    id << 's' << (sessions_.size() + 1) << '-' << std::hex << (rng_() & 0xFFFFFFFFULL);
    std::string ids;
    for (std::size_t i : batch) ids += (ids.empty() ? "" : ";") + instances_[i].id;
    const auto now = clock_();
    append({"session", id.str(), who, to_string(device), to_string(mode), std::to_string(now), ids});
    apply_session(id.str(), who, device, mode, batch);
    return id.str();
  }

  /// Next open task of the session, or nullopt when all ten are done.
  std::optional<TaskView> next_task(const std::string& session_id) {
    std::unique_lock lock(mutex_);
    auto& s = session(session_id);
    for (std::size_t k = 0; k < s.tasks.size(); ++k) {
      auto& t = s.tasks[k];
      if (t.done) continue;
      if (!t.issued_at) {
        const auto now = clock_();
        append({"issue", task_id(session_id, k), std::to_string(now)});
        t.issued_at = now;
      }
      return view(session_id, s, k);
    }
    return std::nullopt;
  }

  TaskView task(const std::string& task_id) const {
    std::shared_lock lock(mutex_);
    const auto [sid, k] = split_task_id(task_id);
    return view(sid, session(sid), k);
  }

  const CollectInstance& task_instance(const std::string& task_id) const {
    std::shared_lock lock(mutex_);
    const auto [sid, k] = split_task_id(task_id);
    return instances_[session(sid).tasks[k].instance];
  }

  ClickOutcome submit_click(const std::string& task_id, int x, int y, const ClientTimeline& timeline) {
    std::unique_lock lock(mutex_);
    const auto [sid, k] = split_task_id(task_id);
    auto& s = session(sid);
    auto& t = s.tasks[k];
    if (t.done) fail(ErrorKind::kConflict, "task " + task_id + " already has a click");
    if (!t.issued_at) fail(ErrorKind::kConflict, "task " + task_id + " has not been issued");
    const auto& inst = instances_[t.instance];
    if (x < 0 || y < 0 || x >= inst.mask.width() || y >= inst.mask.height()) {
      fail(ErrorKind::kInvalidParameter, "click outside the image");
    }
    const auto now = clock_();
    const auto reason = timing_problem(timeline, timings_for(s.mode), now - *t.issued_at);
    ClickOutcome out;
    if (!reason.empty()) {
      out.reason = reason;
      append({"click", task_id, std::to_string(x), std::to_string(y), "rejected", "0", std::to_string(now)});
      return out;
    }
    out.accepted = true;
    out.valid = validate_click(x, y, inst.mask.width(), inst.mask.height(), inst.mask);
    append({"click", task_id, std::to_string(x), std::to_string(y), "accepted", out.valid ? "1" : "0",
            std::to_string(now)});
    apply_click(sid, k, x, y, out.valid);
    out.batch_complete = s.complete();
    out.batch_valid = s.batch_valid;
    return out;
  }

  /// Accepted clicks of complete batches with at least 7 valid clicks, in
  /// submission order, in the dataset CSV schema.
  std::string export_csv() const {
    std::shared_lock lock(mutex_);
    std::vector<ClickRecord> rows;
    for (const auto& [sid, k] : accepted_order_) {
      const auto& s = sessions_.at(sid);
      if (!s.batch_valid.value_or(false)) continue;
      const auto& t = s.tasks[k];
      if (!t.valid) continue;
      const auto& inst = instances_[t.instance];
      ClickRecord r;
      r.dataset = inst.dataset;
      r.image_stem = inst.image_stem;
      r.object_stem = inst.object_stem;
      r.click_type = ClickType::kFirst;
      r.full_stem = inst.id;
      r.device = s.device;
      r.x = t.x;
      r.y = t.y;
      r.w = inst.mask.width();
      r.h = inst.mask.height();
      rows.push_back(std::move(r));
    }
    return to_csv(rows);
  }

  std::size_t session_count() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
  }

  std::optional<bool> batch_valid(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    return session(session_id).batch_valid;
  }

  DisplayMode session_mode(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    return session(session_id).mode;
  }

  /// Empty when the declared timeline is acceptable.
  static std::string timing_problem(const ClientTimeline& c, const PhaseTimings& p, std::int64_t server_elapsed) {
    if (c.target_shown < c.image_shown || c.locked_shown < c.target_shown || c.clicked < c.locked_shown) {
      return "client timeline is not ordered";
    }
    if (c.clicked < c.locked_shown + p.locked_ms) return "click during the locked phase";
    if (server_elapsed < p.total() - kPlausibilitySlackMs) return "click arrived sooner than the phases allow";
    return {};
  }

 private:
  struct TaskState {
    std::size_t instance = 0;
    std::optional<std::int64_t> issued_at;
    bool done = false;
    bool valid = false;
    int x = 0;
    int y = 0;
  };

  struct Session {
    std::string participant;
    Device device = Device::kPc;
    DisplayMode mode = DisplayMode::kCutout;
    std::vector<TaskState> tasks;
    std::optional<bool> batch_valid;

    bool complete() const {
      return std::all_of(tasks.begin(), tasks.end(), [](const TaskState& t) { return t.done; });
    }
  };

  static std::string task_id(const std::string& sid, std::size_t k) { return sid + "-t" + std::to_string(k + 1); }

  std::pair<std::string, std::size_t> split_task_id(const std::string& id) const {
    const auto pos = id.rfind("-t");
    if (pos == std::string::npos) fail(ErrorKind::kNotFound, "unknown task '" + id + "'");
    const std::string sid = id.substr(0, pos);
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(id.substr(pos + 2), &used);
      if (used != id.size() - pos - 2) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorKind::kNotFound, "unknown task '" + id + "'");
    }
    const auto it = sessions_.find(sid);
    if (it == sessions_.end() || k < 1 || k > it->second.tasks.size()) fail(ErrorKind::kNotFound, "unknown task '" + id + "'");
    return {sid, k - 1};
  }

  Session& session(const std::string& id) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorKind::kNotFound, "unknown session '" + id + "'");
    return it->second;
  }

  const Session& session(const std::string& id) const {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorKind::kNotFound, "unknown session '" + id + "'");
    return it->second;
  }

  TaskView view(const std::string& sid, const Session& s, std::size_t k) const {
    const auto& inst = instances_[s.tasks[k].instance];
    return {task_id(sid, k), sid, inst.id, static_cast<int>(k + 1), inst.mask.width(), inst.mask.height(), s.mode,
            timings_for(s.mode)};
  }

  void apply_session(const std::string& id, const std::string& who, Device device, DisplayMode mode,
                     const std::vector<std::size_t>& batch) {
    Session s;
    s.participant = who;
    s.device = device;
    s.mode = mode;
    for (std::size_t i : batch) {
      s.tasks.push_back({i, std::nullopt, false, false, 0, 0});
      seen_[who].insert(instances_[i].image_stem);
    }
    sessions_.emplace(id, std::move(s));
  }

  void apply_click(const std::string& sid, std::size_t k, int x, int y, bool valid) {
    auto& s = session(sid);
    auto& t = s.tasks[k];
    t.done = true;
    t.valid = valid;
    t.x = x;
    t.y = y;
    accepted_order_.emplace_back(sid, k);
    if (s.complete()) {
      bool flags[kBatchSize];
      for (std::size_t i = 0; i < kBatchSize; ++i) flags[i] = s.tasks[i].valid;
      s.batch_valid = validate_batch(std::span<const bool>(flags, kBatchSize));
    }
  }

  void append(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + fields[i];
    if (journal_.is_open()) {
      journal_ << line << '\n';
      journal_.flush();
      if (!journal_) fail(ErrorKind::kStartupError, "journal write failed");
    }
  }

  // Rebuilds the in-memory state from the journal. Rows reference instances
  // by id, so the manifest must still contain them.
  void replay() {
    std::ifstream in(journal_path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = detail::split_commas(line);
      const std::string where = journal_path_.string() + ":" + std::to_string(line_no);
      try {
        if (f[0] == "session" && f.size() == 7) {
          std::vector<std::size_t> batch;
          std::istringstream ids(f[6]);
          std::string id;
          while (std::getline(ids, id, ';')) {
            const auto it = index_.find(id);
            if (it == index_.end()) fail(ErrorKind::kStartupError, where + ": unknown instance '" + id + "'");
            batch.push_back(it->second);
          }
          if (batch.size() != kBatchSize) fail(ErrorKind::kStartupError, where + ": batch is not 10 instances");
          apply_session(f[1], f[2], parse_device(f[3]), parse_display_mode(f[4]), batch);
        } else if (f[0] == "issue" && f.size() == 3) {
          const auto [sid, k] = split_task_id(f[1]);
          session(sid).tasks[k].issued_at = std::stoll(f[2]);
        } else if (f[0] == "click" && f.size() == 7) {
          if (f[4] != "accepted") continue;
          const auto [sid, k] = split_task_id(f[1]);
          apply_click(sid, k, std::stoi(f[2]), std::stoi(f[3]), f[5] == "1");
        } else {
          fail(ErrorKind::kStartupError, where + ": unrecognized journal row");
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kStartupError) throw;
        fail(ErrorKind::kStartupError, where + ": " + e.what());
      } catch (const std::exception& e) {
        fail(ErrorKind::kStartupError, where + ": " + e.what());
      }
    }
  }

  std::vector<CollectInstance> instances_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path journal_path_;
  std::ofstream journal_;
  Clock clock_;
  Rng rng_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::set<std::string>> seen_;  // participant -> image stems
  std::vector<std::pair<std::string, std::size_t>> accepted_order_;
};

}  // namespace rclicks
