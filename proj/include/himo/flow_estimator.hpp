// Copyright 2026 The himo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "himo/flow_icp.hpp"
#include "himo/flow_refine.hpp"
#include "himo/flow_upper_bound.hpp"
#include "himo/sim_scanner.hpp"

namespace himo {

/// Temporal context handed to an estimator. `prev` (and its labels) may be
/// null at a sequence head; `next` may be null at the tail, in which case
/// estimators fall back to matching against the previous frame with negated
/// flow. Labels cover every frame present.
struct FlowContext {
  const Frame* prev = nullptr;
  const Frame* cur = nullptr;
  const Frame* next = nullptr;
  const DynamicLabels* prev_labels = nullptr;
  const DynamicLabels* cur_labels = nullptr;
  const DynamicLabels* next_labels = nullptr;
};

/// Behavioral contract of the interchangeable flow block: any estimator maps
/// a frame context to a FlowField aligned with the current frame, with
/// static-labeled points receiving zero flow.
class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  virtual std::string_view name() const = 0;
  virtual FlowField estimate(const FlowContext& ctx) const = 0;
};

namespace detail {

inline FlowField negate(FlowField flow) {
  for (auto& v : flow.vectors) v = -v;
  return flow;
}

}  // namespace detail

class ZeroFlowEstimator final : public FlowEstimator {
 public:
  std::string_view name() const override { return "zero"; }
  FlowField estimate(const FlowContext& ctx) const override {
    return FlowField::zeros(ctx.cur->size(), ctx.cur->t_sensor);
  }
};

class OracleFlowEstimator final : public FlowEstimator {
 public:
  std::string_view name() const override { return "oracle"; }
  FlowField estimate(const FlowContext& ctx) const override {
    return sim::oracle_flow(*ctx.cur);
  }
};

class ClusterIcpEstimator : public FlowEstimator {
 public:
  explicit ClusterIcpEstimator(IcpParams params = {}) : params_(params) {}
  std::string_view name() const override { return "icp"; }

  FlowField estimate(const FlowContext& ctx) const override {
    if (ctx.next && ctx.next_labels)
      return estimate_cluster_icp(*ctx.cur, *ctx.next, *ctx.cur_labels,
                                  *ctx.next_labels, params_);
    if (ctx.prev && ctx.prev_labels) {
      // sequence tail: align against the previous frame and negate
      FlowField back = estimate_cluster_icp(*ctx.cur, *ctx.prev, *ctx.cur_labels,
                                            *ctx.prev_labels, params_);
      return detail::negate(std::move(back));
    }
    warn("cluster ICP: no temporal context, emitting zero flow");
    FlowField flow = FlowField::zeros(ctx.cur->size(), ctx.cur->t_sensor);
    std::fill(flow.valid.begin(), flow.valid.end(), 0);
    return flow;
  }

 protected:
  IcpParams params_;
};

class UpperBoundEstimator final : public FlowEstimator {
 public:
  std::string_view name() const override { return "upper-bound"; }
  FlowField estimate(const FlowContext& ctx) const override {
    if (ctx.next && ctx.next_labels)
      return estimate_upper_bound(*ctx.cur, *ctx.next, *ctx.cur_labels, *ctx.next_labels)
          .first;
    if (ctx.prev && ctx.prev_labels) {
      FlowField back =
          estimate_upper_bound(*ctx.cur, *ctx.prev, *ctx.cur_labels, *ctx.prev_labels)
              .first;
      return detail::negate(std::move(back));
    }
    warn("upper-bound: no temporal context, emitting zero flow");
    FlowField flow = FlowField::zeros(ctx.cur->size(), ctx.cur->t_sensor);
    std::fill(flow.valid.begin(), flow.valid.end(), 0);
    return flow;
  }
};

class IcpRefineEstimator final : public ClusterIcpEstimator {
 public:
  IcpRefineEstimator(IcpParams icp = {}, RefineParams refine = {})
      : ClusterIcpEstimator(icp), refine_(refine) {}
  std::string_view name() const override { return "icp+refine"; }

  FlowField estimate(const FlowContext& ctx) const override {
    FlowField init = ClusterIcpEstimator::estimate(ctx);
    if (!ctx.prev || !ctx.prev_labels || !ctx.next || !ctx.next_labels) {
      warn("refinement needs both neighbors, returning unrefined flow");
      return init;
    }
    return refine_symmetric_chamfer(*ctx.prev, *ctx.cur, *ctx.next, *ctx.prev_labels,
                                    *ctx.cur_labels, *ctx.next_labels, init, refine_);
  }

 private:
  RefineParams refine_;
};

inline std::unique_ptr<FlowEstimator> make_estimator(const std::string& name,
                                                     IcpParams icp = {},
                                                     RefineParams refine = {}) {
  if (name == "zero") return std::make_unique<ZeroFlowEstimator>();
  if (name == "oracle") return std::make_unique<OracleFlowEstimator>();
  if (name == "icp") return std::make_unique<ClusterIcpEstimator>(icp);
  if (name == "upper-bound") return std::make_unique<UpperBoundEstimator>();
  if (name == "icp+refine") return std::make_unique<IcpRefineEstimator>(icp, refine);
  throw std::invalid_argument("unknown estimator: " + name);
}

}  // namespace himo
