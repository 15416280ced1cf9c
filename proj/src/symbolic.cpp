#include "twoball/symbolic.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "twoball/error.hpp"

namespace twoball {

LongSeq long_sequence(const PhaseState& before, const std::vector<EventRecord>& events,
                      std::size_t begin, std::size_t end) {
  end = std::min(end, events.size());
  std::size_t first = end, last = end;
  for (std::size_t i = begin; i < end; ++i) {
    if (events[i].type != EventType::BallBall) continue;
    if (first == end) first = i;
    last = i;
  }
  if (first == end || first == last) {
    throw Error(ErrorCode::TooFewCollisions, "window contains fewer than two disk-disk collisions");
  }

  LongSeq seq;
  seq.order_n = events[first].reflection.order();
  const GroupElement id = GroupElement::identity(seq.order_n);

  PhaseState prev = first == 0 ? before : events[first - 1].post;
  Junction acc{{id, id}};
  for (std::size_t i = first; i <= last; ++i) {
    const EventRecord& e = events[i];
    if (i > first) prev = events[i - 1].post;
    switch (e.type) {
      case EventType::Singular:
        throw Error(ErrorCode::SingularWindow, "singular event inside the window");
      case EventType::WallHit:
        acc.g[e.ball] = compose(e.reflection, acc.g[e.ball]);
        break;
      case EventType::BallBall:
        if (!seq.collisions.empty()) {
          seq.junctions.push_back(acc);
          acc = Junction{{id, id}};
        }
        seq.collisions.push_back({i, e.time, {prev.v[0], prev.v[1]}, {e.post.v[0], e.post.v[1]}, e.post});
        break;
    }
  }
  return seq;
}

LongSeq long_sequence(const Trajectory& traj) { return long_sequence(traj.initial, traj.events); }

LongSeq slice(const LongSeq& seq, std::size_t first, std::size_t last) {
  if (first > last || last >= seq.collisions.size()) {
    throw Error(ErrorCode::InvalidArgument, "slice bounds outside the sequence");
  }
  if (first == last) throw Error(ErrorCode::TooFewCollisions, "slice holds a single collision");
  LongSeq out;
  out.order_n = seq.order_n;
  out.collisions.assign(seq.collisions.begin() + first, seq.collisions.begin() + last + 1);
  out.junctions.assign(seq.junctions.begin() + first, seq.junctions.begin() + last);
  return out;
}

double transport_deviation(const LongSeq& seq) {
  double worst = 0.0;
  for (std::size_t i = 0; i < seq.junctions.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const Vec2 moved = apply(seq.junctions[i].g[k], seq.collisions[i].v_after[k]);
      worst = std::max(worst, norm(moved - seq.collisions[i + 1].v_before[k]));
    }
  }
  return worst;
}

ShortSeq compress_to_short(const LongSeq& seq) {
  ShortSeq out;
  out.order_n = seq.order_n;
  const GroupElement id = GroupElement::identity(seq.order_n);
  const bool has_velocities = !seq.collisions.empty();

  auto open_island = [&](std::size_t c) {
    Island isl;
    isl.first = c;
    isl.count = 1;
    isl.s = id;
    if (has_velocities && c < seq.collisions.size()) {
      isl.entry = seq.collisions[c].v_before;
      isl.exit = seq.collisions[c].v_after;
      isl.entry_time = seq.collisions[c].time;
    }
    return isl;
  };

  Island cur = open_island(0);
  for (std::size_t i = 0; i < seq.junctions.size(); ++i) {
    const Junction& j = seq.junctions[i];
    if (j.simple()) {
      cur.s = compose(j.g[0], cur.s);
      ++cur.count;
      if (has_velocities) cur.exit = seq.collisions[i + 1].v_after;
    } else {
      out.islands.push_back(cur);
      out.junctions.push_back(j);
      cur = open_island(i + 1);
    }
  }
  out.islands.push_back(cur);
  return out;
}

LongSeq to_long(const ShortSeq& seq) {
  LongSeq out;
  out.order_n = seq.order_n;
  const GroupElement id = GroupElement::identity(seq.order_n);
  for (std::size_t i = 0; i < seq.islands.size(); ++i) {
    const Island& isl = seq.islands[i];
    for (std::size_t c = 0; c < isl.count; ++c) {
      out.collisions.push_back({});
      if (c + 1 < isl.count) {
        const GroupElement g = c == 0 ? isl.s : id;
        out.junctions.push_back({{g, g}});
      }
    }
    if (i < seq.junctions.size()) out.junctions.push_back(seq.junctions[i]);
  }
  return out;
}

bool same_structure(const ShortSeq& a, const ShortSeq& b) {
  if (a.islands.size() != b.islands.size() || a.junctions != b.junctions) return false;
  for (std::size_t i = 0; i < a.islands.size(); ++i) {
    if (a.islands[i].count != b.islands[i].count || a.islands[i].s != b.islands[i].s) return false;
  }
  return true;
}

std::optional<RichWitness> is_rich(const ShortSeq& seq) {
  if (seq.islands.size() < 3) throw Error(ErrorCode::TooShort, "richness needs at least three islands");
  for (std::size_t i = 0; i + 1 < seq.junctions.size(); ++i) {
    const GroupElement hat = seq.junctions[i].hat();
    const GroupElement bar = seq.junctions[i + 1].bar();
    if (!hat.is_reflection()) continue;
    if (bar.is_reflection() && bar.k() != conjugate_axis(seq.islands[i + 1].s, hat.k())) {
      return RichWitness{i, 1};
    }
    if (bar.is_rotation()) return RichWitness{i, 2};
  }
  return std::nullopt;
}

std::string_view poorness_name(PoornessClass c) {
  switch (c) {
    case PoornessClass::OPoor: return "O_poor";
    case PoornessClass::RPoor: return "R_poor";
    case PoornessClass::Rich: return "Rich";
    case PoornessClass::Mixed: return "Mixed";
  }
  return "?";
}

Poorness poorness_class(const ShortSeq& seq) {
  Poorness p;
  if (seq.islands.size() >= 3) {
    if (auto w = is_rich(seq)) {
      p.cls = PoornessClass::Rich;
      p.rich = w;
      return p;
    }
  }
  const bool o_poor = std::all_of(seq.junctions.begin(), seq.junctions.end(),
                                  [](const Junction& j) { return j.hat().is_rotation(); });
  if (o_poor) {
    p.cls = PoornessClass::OPoor;
    return p;
  }
  bool r_poor = seq.junctions.front().hat().is_reflection();
  for (std::size_t i = 0; r_poor && i + 1 < seq.junctions.size(); ++i) {
    const GroupElement hat = seq.junctions[i].hat();
    const GroupElement bar = seq.junctions[i + 1].bar();
    r_poor = hat.is_reflection() && bar.is_reflection() &&
             bar.k() == conjugate_axis(seq.islands[i + 1].s, hat.k());
  }
  if (r_poor) {
    p.cls = PoornessClass::RPoor;
    p.axis = seq.junctions.front().hat().k();
    return p;
  }
  p.cls = PoornessClass::Mixed;
  return p;
}

Poorness poorness_class(const LongSeq& seq) { return poorness_class(compress_to_short(seq)); }

ShortSeq reverse(const ShortSeq& seq) {
  ShortSeq out;
  out.order_n = seq.order_n;
  std::size_t collisions = 0;
  for (const auto& isl : seq.islands) collisions += isl.count;
  for (auto it = seq.islands.rbegin(); it != seq.islands.rend(); ++it) {
    Island isl = *it;
    isl.first = collisions - (it->first + it->count);
    isl.s = inverse(it->s);
    auto negate = [](const std::optional<std::array<Vec2, 2>>& v) -> std::optional<std::array<Vec2, 2>> {
      if (!v) return std::nullopt;
      return std::array<Vec2, 2>{-(*v)[0], -(*v)[1]};
    };
    isl.entry = negate(it->exit);
    isl.exit = negate(it->entry);
    isl.entry_time = -it->entry_time;
    out.islands.push_back(isl);
  }
  for (auto it = seq.junctions.rbegin(); it != seq.junctions.rend(); ++it) {
    out.junctions.push_back({{inverse(it->g[0]), inverse(it->g[1])}});
  }
  return out;
}

std::string to_text(const ShortSeq& seq) {
  std::ostringstream os;
  for (std::size_t i = 0; i < seq.islands.size(); ++i) {
    const Island& isl = seq.islands[i];
    if (i > 0) {
      const Junction& j = seq.junctions[i - 1];
      os << " [" << to_token(j.g[0]) << ',' << to_token(j.g[1]) << "] ";
    }
    if (isl.count == 1) {
      os << 'b';
    } else {
      os << "(b" << isl.count << ",s=" << to_token(isl.s) << ')';
    }
  }
  return os.str();
}

ShortSeq parse_short(const std::string& text, int order_n) {
  ShortSeq out;
  out.order_n = order_n;
  std::size_t pos = 0, collisions = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ParseError, "short sequence, column " + std::to_string(pos + 1) + ": " + what);
  };
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto token_until = [&](char stop) {
    const std::size_t end = text.find(stop, pos);
    if (end == std::string::npos) fail(std::string("expected '") + stop + "'");
    std::string tok = text.substr(pos, end - pos);
    pos = end + 1;
    return tok;
  };
  auto read_island = [&] {
    skip();
    Island isl;
    isl.first = collisions;
    isl.s = GroupElement::identity(order_n);
    if (pos < text.size() && text[pos] == 'b') {
      ++pos;
    } else if (text.compare(pos, 2, "(b") == 0) {
      pos += 2;
      const std::string count = token_until(',');
      try {
        isl.count = std::stoul(count);
      } catch (const std::exception&) {
        fail("bad island size '" + count + "'");
      }
      if (isl.count < 1) fail("island size must be positive");
      if (text.compare(pos, 2, "s=") != 0) fail("expected 's='");
      pos += 2;
      isl.s = parse_token(token_until(')'), order_n);
    } else {
      fail("expected 'b' or '(b'");
    }
    collisions += isl.count;
    out.islands.push_back(isl);
  };

  read_island();
  for (;;) {
    skip();
    if (pos >= text.size()) break;
    if (text[pos] != '[') fail("expected '['");
    ++pos;
    const GroupElement g1 = parse_token(token_until(','), order_n);
    const GroupElement g2 = parse_token(token_until(']'), order_n);
    if (g1 == g2) fail("junction inside a short sequence must not be simple");
    out.junctions.push_back({{g1, g2}});
    read_island();
  }
  return out;
}

}  // namespace twoball
