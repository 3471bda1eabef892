#pragma once

// Primal network simplex with a spanning-tree basis stored as parent/thread
// lists and block-search pricing. The basis starts from artificial arcs to an
// extra root node; all artificial flow must vanish at optimality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nero/mcf/max_flow.hpp"
#include "nero/mcf/network.hpp"

namespace nero::mcf {

struct SimplexOutcome {
  bool feasible = false;
  std::vector<std::int64_t> flow;       // one entry per network arc
  std::vector<std::int64_t> potential;  // one entry per node
  std::int64_t pivots = 0;
};

class NetworkSimplex {
 public:
  explicit NetworkSimplex(const FlowNetwork& net) : net_(net) {}

  /// Solves the network as given; lower bounds must be zero.
  SimplexOutcome run(const Deadline& deadline = std::nullopt) {
    init();
    std::int64_t pivots = 0;
    while (find_entering_arc()) {
      if ((++pivots & 1023) == 0) check_deadline(deadline);
      find_join_node();
      bool change = find_leaving_arc();
      if (delta_ >= kMax) throw ModelError("network simplex detected an unbounded cycle");
      change_flow(change);
      if (change) {
        update_tree_structure();
        update_potential();
      }
    }
    SimplexOutcome out;
    out.pivots = pivots;
    out.feasible = true;
    for (int e = arc_num_; e < all_arc_num_; ++e)
      if (flow_[static_cast<std::size_t>(e)] != 0) out.feasible = false;
    out.flow.assign(flow_.begin(), flow_.begin() + arc_num_);
    out.potential.assign(pi_.begin(), pi_.begin() + node_num_);
    return out;
  }

 private:
  static constexpr int kStateUpper = -1;
  static constexpr int kStateTree = 0;
  static constexpr int kStateLower = 1;
  static constexpr int kDirUp = 1;
  static constexpr int kDirDown = -1;
  static constexpr std::int64_t kMax = kInfiniteCapacity;

  template <class T>
  static T& at(std::vector<T>& v, int i) { return v[static_cast<std::size_t>(i)]; }

  void init() {
    node_num_ = net_.node_count;
    arc_num_ = net_.arc_count();
    all_arc_num_ = arc_num_ + node_num_;
    root_ = node_num_;
    const auto total_nodes = static_cast<std::size_t>(node_num_ + 1);
    const auto total_arcs = static_cast<std::size_t>(all_arc_num_);
    source_.assign(total_arcs, 0);
    target_.assign(total_arcs, 0);
    cap_.assign(total_arcs, 0);
    cost_.assign(total_arcs, 0);
    flow_.assign(total_arcs, 0);
    state_.assign(total_arcs, kStateLower);
    parent_.assign(total_nodes, -1);
    pred_.assign(total_nodes, -1);
    thread_.assign(total_nodes, 0);
    rev_thread_.assign(total_nodes, 0);
    succ_num_.assign(total_nodes, 0);
    last_succ_.assign(total_nodes, 0);
    pred_dir_.assign(total_nodes, 0);
    pi_.assign(total_nodes, 0);

    std::int64_t max_cost = 0;
    for (int e = 0; e < arc_num_; ++e) {
      const Arc& a = net_.arcs[static_cast<std::size_t>(e)];
      if (a.lower != 0) throw ModelError("network simplex expects zero lower bounds");
      at(source_, e) = a.tail;
      at(target_, e) = a.head;
      at(cap_, e) = a.capacity;
      at(cost_, e) = a.cost;
      max_cost = std::max(max_cost, a.cost < 0 ? -a.cost : a.cost);
    }
    // Reduced costs are sums of a few potentials, each bounded by the artificial cost.
    const std::int64_t art_cost = checked_mul(checked_add(max_cost, 1), node_num_ + 1);
    (void)checked_mul(art_cost, 4);

    block_size_ = std::max(10, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(std::max(arc_num_, 1))))));
    next_arc_ = 0;

    at(parent_, root_) = -1;
    at(pred_, root_) = -1;
    at(thread_, root_) = 0;
    at(rev_thread_, 0) = root_;
    at(succ_num_, root_) = node_num_ + 1;
    at(last_succ_, root_) = root_ - 1;
    at(pi_, root_) = 0;
    for (int u = 0, e = arc_num_; u != node_num_; ++u, ++e) {
      at(parent_, u) = root_;
      at(pred_, u) = e;
      at(thread_, u) = u + 1;
      at(rev_thread_, u + 1) = u;
      at(succ_num_, u) = 1;
      at(last_succ_, u) = u;
      at(cap_, e) = kMax;
      at(state_, e) = kStateTree;
      std::int64_t b = net_.supply[static_cast<std::size_t>(u)];
      if (b >= 0) {
        at(pred_dir_, u) = kDirUp;
        at(pi_, u) = 0;
        at(source_, e) = u;
        at(target_, e) = root_;
        at(flow_, e) = b;
        at(cost_, e) = 0;
      } else {
        at(pred_dir_, u) = kDirDown;
        at(pi_, u) = art_cost;
        at(source_, e) = root_;
        at(target_, e) = u;
        at(flow_, e) = -b;
        at(cost_, e) = art_cost;
      }
    }
  }

  [[nodiscard]] std::int64_t reduced_cost(int e) const {
    return cost_[static_cast<std::size_t>(e)] + pi_[static_cast<std::size_t>(source_[static_cast<std::size_t>(e)])] -
           pi_[static_cast<std::size_t>(target_[static_cast<std::size_t>(e)])];
  }

  // Block search: scan blocks of arcs cyclically from the last position and
  // take the most violating arc of the first block containing a violation.
  bool find_entering_arc() {
    std::int64_t min = 0;
    int cnt = block_size_;
    int e;
    for (e = next_arc_; e != all_arc_num_; ++e) {
      std::int64_t c = state_[static_cast<std::size_t>(e)] * reduced_cost(e);
      if (c < min) {
        min = c;
        in_arc_ = e;
      }
      if (--cnt == 0) {
        if (min < 0) goto search_end;
        cnt = block_size_;
      }
    }
    for (e = 0; e != next_arc_; ++e) {
      std::int64_t c = state_[static_cast<std::size_t>(e)] * reduced_cost(e);
      if (c < min) {
        min = c;
        in_arc_ = e;
      }
      if (--cnt == 0) {
        if (min < 0) goto search_end;
        cnt = block_size_;
      }
    }
    if (min >= 0) return false;
  search_end:
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = at(source_, in_arc_);
    int v = at(target_, in_arc_);
    while (u != v) {
      if (at(succ_num_, u) < at(succ_num_, v))
        u = at(parent_, u);
      else
        v = at(parent_, v);
    }
    join_ = u;
  }

  bool find_leaving_arc() {
    int first, second;
    if (at(state_, in_arc_) == kStateLower) {
      first = at(source_, in_arc_);
      second = at(target_, in_arc_);
    } else {
      first = at(target_, in_arc_);
      second = at(source_, in_arc_);
    }
    delta_ = at(cap_, in_arc_);
    int result = 0;
    for (int u = first; u != join_; u = at(parent_, u)) {
      int e = at(pred_, u);
      std::int64_t d = at(flow_, e);
      if (at(pred_dir_, u) == kDirDown) {
        std::int64_t c = at(cap_, e);
        d = c >= kMax ? kMax : c - d;
      }
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = at(parent_, u)) {
      int e = at(pred_, u);
      std::int64_t d = at(flow_, e);
      if (at(pred_dir_, u) == kDirUp) {
        std::int64_t c = at(cap_, e);
        d = c >= kMax ? kMax : c - d;
      }
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return result != 0;
  }

  void change_flow(bool change) {
    if (delta_ > 0) {
      std::int64_t val = at(state_, in_arc_) * delta_;
      at(flow_, in_arc_) += val;
      for (int u = at(source_, in_arc_); u != join_; u = at(parent_, u)) at(flow_, at(pred_, u)) -= at(pred_dir_, u) * val;
      for (int u = at(target_, in_arc_); u != join_; u = at(parent_, u)) at(flow_, at(pred_, u)) += at(pred_dir_, u) * val;
    }
    if (change) {
      at(state_, in_arc_) = kStateTree;
      at(state_, at(pred_, u_out_)) = at(flow_, at(pred_, u_out_)) == 0 ? kStateLower : kStateUpper;
    } else {
      at(state_, in_arc_) = -at(state_, in_arc_);
    }
  }

  void update_tree_structure() {
    int old_rev_thread = at(rev_thread_, u_out_);
    int old_succ_num = at(succ_num_, u_out_);
    int old_last_succ = at(last_succ_, u_out_);
    v_out_ = at(parent_, u_out_);

    if (u_in_ == u_out_) {
      at(parent_, u_in_) = v_in_;
      at(pred_, u_in_) = in_arc_;
      at(pred_dir_, u_in_) = u_in_ == at(source_, in_arc_) ? kDirUp : kDirDown;
      if (at(thread_, v_in_) != u_out_) {
        int after = at(thread_, old_last_succ);
        at(thread_, old_rev_thread) = after;
        at(rev_thread_, after) = old_rev_thread;
        after = at(thread_, v_in_);
        at(thread_, v_in_) = u_out_;
        at(rev_thread_, u_out_) = v_in_;
        at(thread_, old_last_succ) = after;
        at(rev_thread_, after) = old_last_succ;
      }
    } else {
      int thread_continue = old_rev_thread == v_in_ ? at(thread_, old_last_succ) : at(thread_, v_in_);

      // Re-hang the stem u_in .. u_out under v_in, reversing parent links.
      int stem = u_in_;
      int par_stem = v_in_;
      int next_stem;
      int last = at(last_succ_, u_in_);
      int before, after = at(thread_, last);
      at(thread_, v_in_) = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        next_stem = at(parent_, stem);
        at(thread_, last) = next_stem;
        dirty_revs_.push_back(last);

        before = at(rev_thread_, stem);
        at(thread_, before) = after;
        at(rev_thread_, after) = before;

        at(parent_, stem) = par_stem;
        par_stem = stem;
        stem = next_stem;

        last = at(last_succ_, stem) == at(last_succ_, par_stem) ? at(rev_thread_, par_stem) : at(last_succ_, stem);
        after = at(thread_, last);
      }
      at(parent_, u_out_) = par_stem;
      at(thread_, last) = thread_continue;
      at(rev_thread_, thread_continue) = last;
      at(last_succ_, u_out_) = last;

      if (old_rev_thread != v_in_) {
        at(thread_, old_rev_thread) = after;
        at(rev_thread_, after) = old_rev_thread;
      }
      for (int u : dirty_revs_) at(rev_thread_, at(thread_, u)) = u;

      int tmp_sc = 0, tmp_ls = at(last_succ_, u_out_);
      for (int u = u_out_, p = at(parent_, u); u != u_in_; u = p, p = at(parent_, u)) {
        at(pred_, u) = at(pred_, p);
        at(pred_dir_, u) = -at(pred_dir_, p);
        tmp_sc += at(succ_num_, u) - at(succ_num_, p);
        at(succ_num_, u) = tmp_sc;
        at(last_succ_, p) = tmp_ls;
      }
      at(pred_, u_in_) = in_arc_;
      at(pred_dir_, u_in_) = u_in_ == at(source_, in_arc_) ? kDirUp : kDirDown;
      at(succ_num_, u_in_) = old_succ_num;
    }

    int up_limit_out = at(last_succ_, join_) == v_in_ ? join_ : -1;
    int last_succ_out = at(last_succ_, u_out_);
    for (int u = v_in_; u != -1 && at(last_succ_, u) == v_in_; u = at(parent_, u)) at(last_succ_, u) = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && at(last_succ_, u) == old_last_succ; u = at(parent_, u))
        at(last_succ_, u) = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && at(last_succ_, u) == old_last_succ; u = at(parent_, u))
        at(last_succ_, u) = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = at(parent_, u)) at(succ_num_, u) += old_succ_num;
    for (int u = v_out_; u != join_; u = at(parent_, u)) at(succ_num_, u) -= old_succ_num;
  }

  void update_potential() {
    std::int64_t sigma = at(pi_, v_in_) - at(pi_, u_in_) - at(pred_dir_, u_in_) * at(cost_, in_arc_);
    int end = at(thread_, at(last_succ_, u_in_));
    for (int u = u_in_; u != end; u = at(thread_, u)) at(pi_, u) += sigma;
  }

  const FlowNetwork& net_;
  int node_num_ = 0, arc_num_ = 0, all_arc_num_ = 0, root_ = 0;
  std::vector<int> source_, target_;
  std::vector<std::int64_t> cap_, cost_, flow_, pi_;
  std::vector<int> state_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
  std::vector<int> dirty_revs_;
  int block_size_ = 10, next_arc_ = 0;
  int in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  std::int64_t delta_ = 0;
};

}  // namespace nero::mcf
