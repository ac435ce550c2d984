#include "freqadmm/anomaly/plant.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <thread>
#include <utility>

#include "freqadmm/core/admm.hpp"
#include "freqadmm/core/errors.hpp"
#include "freqadmm/net/sim.hpp"
#include "freqadmm/net/socket.hpp"

namespace freqadmm::anomaly {

void Plant::apply(const Problem& next) {
  const std::size_t n = current_.functions.size();
  if (next.functions.size() != n || next.budget.size() != n ||
      next.budget.gamma != current_.budget.gamma) {
    throw ContractViolation("plant: device set and lower bounds are fixed");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(next.functions[i] == current_.functions[i])) {
      set_function(i, next.functions[i]);
      current_.functions[i] = next.functions[i];
    }
    if (next.budget.a[i] != current_.budget.a[i]) {
      set_size(i, next.budget.a[i]);
      current_.budget.a[i] = next.budget.a[i];
    }
  }
  const double dc = next.budget.c - current_.budget.c;
  const double dd = next.budget.d - current_.budget.d;
  if (dc != 0.0 || dd != 0.0) {
    shift_capacity(dc, dd);
    // Same arithmetic as the gateway, which only ever sees the deltas.
    current_.budget.c += dc;
    current_.budget.d += dd;
  }
}

namespace {

class EnginePlant final : public Plant {
 public:
  EnginePlant(Problem p, SolverConfig cfg)
      : Plant(p), engine_(std::move(p.functions), std::move(p.budget), cfg) {}

  void run(const RoundHook& hook) override {
    while (hook(engine_.step())) {
    }
  }

 protected:
  void set_function(std::size_t i, const UtilityFunction& f) override {
    engine_.set_function(i, f);
  }
  void set_size(std::size_t i, double a) override {
    ResourceBudget b = engine_.budget();
    b.a[i] = a;
    engine_.set_budget(std::move(b));
  }
  void shift_capacity(double dc, double dd) override {
    ResourceBudget b = engine_.budget();
    b.c += dc;
    b.d += dd;
    engine_.set_budget(std::move(b));
  }

 private:
  AdmmEngine engine_;
};

class ProtocolPlant final : public Plant {
 public:
  ProtocolPlant(Problem p, net::TransportProfile transport, SolverConfig cfg)
      : Plant(std::move(p)), transport_(std::move(transport)), cfg_(cfg) {
    transport_.validate();
    current_.budget.validate();
  }

  void run(const RoundHook& hook) override {
    const std::size_t n = current_.functions.size();
    net::GatewayConfig gc;
    gc.c = current_.budget.c;
    gc.d = current_.budget.d;
    gc.solver = cfg_;
    gc.expected_devices = n;
    gc.continuous = true;
    gc.round_timeout = transport_.round_timeout();
    net::GatewayNode gateway(gc);

    std::vector<std::unique_ptr<net::DeviceNode>> nodes;
    for (std::size_t i = 0; i < n; ++i) {
      nodes.push_back(std::make_unique<net::DeviceNode>(
          static_cast<net::DeviceId>(i + 1), current_.functions[i], current_.budget.a[i],
          current_.budget.gamma[i], cfg_));
    }
    if (transport_.mode == net::TransportMode::Simulated) {
      run_sim(gateway, nodes, hook);
    } else {
      run_socket(gateway, nodes, hook);
    }
  }

 protected:
  void set_function(std::size_t i, const UtilityFunction& f) override {
    if (sockets_.empty()) {
      nodes_[i]->set_function(f);
    } else {
      sockets_[i]->with_node([&](net::DeviceNode& d) { d.set_function(f); });
    }
  }
  void set_size(std::size_t i, double a) override {
    if (sockets_.empty()) {
      pending_.push_back(nodes_[i]->resize(a));
    } else {
      pending_.push_back(sockets_[i]->with_node([&](net::DeviceNode& d) { return d.resize(a); }));
    }
  }
  void shift_capacity(double dc, double dd) override {
    net::Reconfigure r;
    r.delta_c = dc;
    r.delta_d = dd;
    pending_.push_back(r);
  }

 private:
  // Adapts the driver's hook to the gateway's round gate.
  net::RoundGate gate(const RoundHook& hook, bool& stop) {
    return [this, &hook, &stop](const TraceRow& row) {
      pending_.clear();
      try {
        if (!stop && !hook(row)) stop = true;
      } catch (...) {
        // Unwinding through the transport would strand its threads.
        error_ = std::current_exception();
        stop = true;
      }
      return std::exchange(pending_, {});
    };
  }

  void run_sim(net::GatewayNode& gateway, std::vector<std::unique_ptr<net::DeviceNode>>& nodes,
               const RoundHook& hook) {
    net::SimNetwork sim(gateway, transport_);
    for (auto& d : nodes) {
      nodes_.push_back(d.get());
      sim.attach(*d, 0.0);
    }
    bool stop = false;
    sim.set_round_gate(gate(hook, stop));
    auto aborted = [&] {
      for (const auto& e : sim.log()) {
        if (e.kind == "device_aborted") return &e;
      }
      return static_cast<const net::LogEvent*>(nullptr);
    };
    const bool done = sim.run_until(
        [&] { return stop || aborted() != nullptr; },
        std::numeric_limits<double>::infinity());
    nodes_.clear();
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
    if (const auto* e = aborted()) throw PlantFailure("device aborted: " + e->detail);
    if (!done) throw PlantFailure("simulated network went idle");
  }

  void run_socket(net::GatewayNode& gateway, std::vector<std::unique_ptr<net::DeviceNode>>& nodes,
                  const RoundHook& hook) {
    net::SocketGateway server(gateway, transport_);
    for (auto& d : nodes) {
      sockets_.push_back(std::make_unique<net::SocketDevice>(*d, transport_, "127.0.0.1", server.port()));
    }
    bool stop = false;
    server.set_round_gate(gate(hook, stop));
    std::vector<std::string> errors(nodes.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < sockets_.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          sockets_[i]->run();
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
        server.stop();
      });
    }
    server.serve([&] { return stop; });
    for (auto& s : sockets_) s->stop();
    for (auto& t : threads) t.join();
    std::string failure;
    if (!stop) {
      for (std::size_t i = 0; i < sockets_.size(); ++i) {
        for (const auto& e : sockets_[i]->log()) {
          if (e.kind == "aborted" || e.kind == "transport_lost") failure = e.kind + ": " + e.detail;
        }
        if (!errors[i].empty()) failure = errors[i];
      }
      if (failure.empty()) failure = "gateway stopped early";
    }
    sockets_.clear();
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
    if (!stop) throw PlantFailure(failure);
  }

  net::TransportProfile transport_;
  SolverConfig cfg_;
  std::vector<net::DeviceNode*> nodes_;
  std::vector<std::unique_ptr<net::SocketDevice>> sockets_;
  std::vector<net::Message> pending_;
  std::exception_ptr error_;
};

}  // namespace

std::unique_ptr<Plant> make_engine_plant(Problem problem, SolverConfig cfg) {
  problem.budget.validate();
  return std::make_unique<EnginePlant>(std::move(problem), cfg);
}

std::unique_ptr<Plant> make_protocol_plant(Problem problem, net::TransportProfile transport,
                                           SolverConfig cfg) {
  return std::make_unique<ProtocolPlant>(std::move(problem), std::move(transport), cfg);
}

}  // namespace freqadmm::anomaly
