#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <set>
#include <thread>

#include "freqadmm/core/admm.hpp"
#include "freqadmm/core/catalog.hpp"
#include "freqadmm/core/errors.hpp"
#include "freqadmm/net/dfwf.hpp"
#include "freqadmm/net/message.hpp"
#include "freqadmm/net/session.hpp"
#include "freqadmm/net/sim.hpp"
#include "freqadmm/net/socket.hpp"
#include "support/printers.hpp"

using namespace freqadmm;
using namespace freqadmm::net;

namespace {

std::vector<DeviceSpec> allocation_devices(std::size_t n) {
  const auto fs = catalog::allocation_utilities();
  const auto b = catalog::allocation_budget(3);
  std::vector<DeviceSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<DeviceId>(i + 1), fs[i], b.a[i], b.gamma[i]});
  }
  return out;
}

SessionPlan two_device_plan() {
  SessionPlan p;
  p.c = 10.0;
  p.d = 15.0;
  p.devices = allocation_devices(2);
  return p;
}

std::set<std::string> keys_of(const std::string& frame_bytes) {
  const auto body = frame_bytes.substr(frame_bytes.find(' ') + 1);
  std::set<std::string> keys;
  std::size_t pos = body.find(' ');
  while (pos != std::string::npos) {
    const auto next = body.find(' ', pos + 1);
    const auto tok = body.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
    keys.insert(tok.substr(0, tok.find('=')));
    pos = next;
  }
  return keys;
}

}  // namespace

TEST(Wire, EveryKindRoundTrips) {
  Reconfigure rc{3, -1.5, 2.25, 0.7};
  Reconfigure sys{kSystemOrigin, 1.0, 0.0, std::nullopt};
  const std::vector<Message> msgs{
      Register{7, 2.0, 1.0},
      VUpdate{7, 12, 3.9291561},
      ZBroadcast{7, 12, 1.0 / 3.0, BroadcastStatus::Final},
      DataPacket{2, 1234.5, 3000000, 99},
      rc,
      sys,
      AnomalyAlert{1, "z deviates 94% = bad\nline two"},
  };
  for (const auto& m : msgs) {
    EXPECT_EQ(decode(encode(m)), m) << encode(m);
    FrameReader r;
    r.feed(frame(m));
    EXPECT_EQ(r.next(), m);
    EXPECT_EQ(r.buffered(), 0u);
  }
}

TEST(Wire, RealsAreBitExact) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    double x;
    const auto bits = rng();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const auto back = std::get<VUpdate>(decode(encode(VUpdate{1, 1, x}))).v;
    EXPECT_EQ(std::memcmp(&back, &x, sizeof x), 0) << encode(VUpdate{1, 1, x});
  }
  const double neg_zero = -0.0;
  EXPECT_TRUE(std::signbit(std::get<VUpdate>(decode(encode(VUpdate{1, 1, neg_zero}))).v));
}

TEST(Wire, StreamFedOneByteAtATime) {
  std::string bytes;
  for (int k = 0; k < 5; ++k) bytes += frame(VUpdate{1, k, k * 0.5});
  FrameReader r;
  std::vector<Message> got;
  for (char ch : bytes) {
    r.feed(std::string_view(&ch, 1));
    while (auto m = r.next()) got.push_back(*m);
  }
  ASSERT_EQ(got.size(), 5u);
  EXPECT_EQ(std::get<VUpdate>(got[4]).v, 2.0);
}

TEST(Wire, MalformedInputIsRejected) {
  EXPECT_THROW(decode("Bogus device_id=1"), WireError);
  EXPECT_THROW(decode("VUpdate device_id=1 iteration=2"), WireError);
  EXPECT_THROW(decode("VUpdate device_id=1 iteration=2 v=1 v=2"), WireError);
  EXPECT_THROW(decode("VUpdate device_id=1 iteration=2 v=1 x=1"), WireError);
  EXPECT_THROW(decode("VUpdate device_id=-1 iteration=2 v=1"), WireError);
  EXPECT_THROW(decode("VUpdate device_id=1 iteration=2 v=1.0abc"), WireError);
  EXPECT_THROW(decode("ZBroadcast device_id=1 iteration=2 z=1 status=done"), WireError);
  EXPECT_THROW(decode("AnomalyAlert device_id=1 detail=%G1"), WireError);

  FrameReader bad_len;
  bad_len.feed("x3 abc\n");
  EXPECT_THROW(bad_len.next(), WireError);
  FrameReader no_newline;
  no_newline.feed("5 VUpd!!");
  EXPECT_THROW(no_newline.next(), WireError);
}

TEST(Dfwf, OneHertz) {
  std::vector<double> t;
  for (int i = 0; i <= 10; ++i) t.push_back(i);
  EXPECT_DOUBLE_EQ(estimate_dfwf(t).estimated_hz, 1.0);
}

TEST(Dfwf, FourHertzOverFullWindow) {
  std::vector<double> t;
  for (int i = 0; i <= 300; ++i) t.push_back(0.25 * i);
  const auto e = estimate_dfwf(t, 300);
  EXPECT_EQ(e.window_packets, 300u);
  EXPECT_NEAR(e.estimated_hz, 4.0, 1e-12);
}

TEST(Dfwf, PerPacketOverheadLowersTheRate) {
  std::vector<double> t;
  for (int i = 0; i <= 300; ++i) t.push_back(i * (0.25 + 0.0043));
  const auto e = against_theory(estimate_dfwf(t), 4.0);
  EXPECT_NEAR(e.estimated_hz, 3.932, 5e-4);
  EXPECT_NEAR(e.delay_ms, 4.3, 1e-9);
}

TEST(Dfwf, UsesOnlyTheTrailingWindow) {
  std::vector<double> t;
  double now = 0.0;
  for (int i = 0; i < 100; ++i) t.push_back(now += 1.0);
  for (int i = 0; i < 10; ++i) t.push_back(now += 0.5);
  EXPECT_NEAR(estimate_dfwf(t, 11).estimated_hz, 2.0, 1e-12);
}

TEST(Dfwf, Contracts) {
  EXPECT_THROW(estimate_dfwf(std::vector<double>{1.0}), ContractViolation);
  EXPECT_THROW(estimate_dfwf(std::vector<double>{0.0, 2.0, 1.0}), ContractViolation);
  EXPECT_THROW(estimate_dfwf(std::vector<double>{1.0, 1.0}), ContractViolation);
}

TEST(Gateway, DuplicateRegistrationIsRejected) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  cfg.expected_devices = 2;
  GatewayNode gw(cfg);
  EXPECT_TRUE(gw.on_message(Register{1, 2.0, 1.0}, 0.0).empty());
  EXPECT_TRUE(gw.on_message(Register{1, 3.0, 1.0}, 0.0).empty());
  EXPECT_EQ(gw.devices().size(), 1u);
  EXPECT_EQ(gw.log().back().kind, "registration_rejected");
  const auto out = gw.on_message(Register{2, 3.0, 1.0}, 0.0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(std::get<ZBroadcast>(out[0].msg).status, BroadcastStatus::Resume);
}

TEST(Gateway, InfeasibleRegistrationIsRejected) {
  GatewayConfig cfg;
  cfg.c = 2;
  cfg.d = 15;
  cfg.expected_devices = 3;
  GatewayNode gw(cfg);
  gw.on_message(Register{1, 2.0, 1.5}, 0.0);
  gw.on_message(Register{2, 2.0, 1.5}, 0.0);
  EXPECT_EQ(gw.devices().size(), 1u);
  EXPECT_EQ(gw.log().back().kind, "registration_rejected");
}

TEST(Gateway, MissingVUpdateLogsStallAndKeepsWaiting) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  cfg.expected_devices = 2;
  cfg.round_timeout = 0.05;
  GatewayNode gw(cfg);
  gw.on_message(Register{1, 2.0, 1.0}, 0.0);
  gw.on_message(Register{2, 3.0, 1.0}, 0.0);
  gw.on_message(VUpdate{1, 1, 1.0}, 0.01);
  gw.on_timer(0.04);
  EXPECT_NE(gw.log().back().kind, "stall");
  gw.on_timer(0.06);
  EXPECT_EQ(gw.log().back().kind, "stall");
  EXPECT_NE(gw.log().back().detail.find("missing 2"), std::string::npos);
  EXPECT_EQ(gw.rounds(), 0u);
  const auto out = gw.on_message(VUpdate{2, 1, 4.0}, 0.2);
  EXPECT_EQ(gw.rounds(), 1u);
  EXPECT_EQ(out.size(), 2u);
}

TEST(Gateway, StaleVUpdateIsIgnored) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  GatewayNode gw(cfg);
  gw.on_message(Register{1, 2.0, 1.0}, 0.0);
  EXPECT_TRUE(gw.on_message(VUpdate{1, 5, 1.0}, 0.0).empty());
  EXPECT_EQ(gw.log().back().kind, "stale_v");
}

TEST(Protocol, ZeroDelayMatchesSolverBitForBit) {
  for (std::size_t n : {2u, 3u}) {
    SessionPlan p;
    p.c = 10.0;
    p.d = 15.0;
    p.devices = allocation_devices(n);
    p.window = 20;
    const auto rep = run_session(p);
    ASSERT_TRUE(rep.completed);

    std::vector<UtilityFunction> fs;
    for (const auto& d : p.devices) fs.push_back(d.f);
    const auto ref = admm_solve(fs, catalog::allocation_budget(n));
    ASSERT_GE(rep.trace.size(), ref.trace.rows.size());
    for (std::size_t k = 0; k < ref.trace.rows.size(); ++k) {
      ASSERT_EQ(rep.trace[k], ref.trace.rows[k]) << "round " << k;
    }
    const auto fin = rep.stages.at(0).final_iteration;
    EXPECT_LE(std::llabs(fin - static_cast<long long>(ref.iterations)), 10);
  }
}

TEST(Protocol, DelayAndJitterDoNotChangeTheTrajectory) {
  auto p = two_device_plan();
  p.window = 20;
  const auto base = run_session(p);
  p.transport.base_delay_ms = 3.0;
  p.transport.jitter_ms = 2.5;
  p.transport.seed = 42;
  const auto slow = run_session(p);
  ASSERT_TRUE(slow.completed);
  EXPECT_EQ(slow.trace, base.trace);
}

TEST(Protocol, SimulatedRunsAreDeterministic) {
  auto p = two_device_plan();
  p.window = 50;
  p.transport.base_delay_ms = 2.0;
  p.transport.jitter_ms = 1.0;
  p.transport.seed = 9;
  const auto a = run_session(p);
  const auto b = run_session(p);
  ASSERT_EQ(a.usage.size(), b.usage.size());
  for (std::size_t i = 0; i < a.usage.size(); ++i) {
    EXPECT_EQ(a.usage[i].time, b.usage[i].time);
    EXPECT_EQ(a.usage[i].storage, b.usage[i].storage);
  }
  EXPECT_EQ(a.stages[0].estimates[1].estimated_hz, b.stages[0].estimates[1].estimated_hz);
}

TEST(Privacy, NoUtilityParametersOrSeparateIteratesOnTheWire) {
  auto p = two_device_plan();
  p.joiners = {allocation_devices(3)[2]};
  p.window = 30;
  p.record_wire = true;
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  ASSERT_FALSE(rep.wire.empty());
  const std::set<std::string> forbidden{"x", "u", "scale", "offset", "cubic",
                                        "constant", "center", "shift", "kind"};
  for (const auto& f : rep.wire) {
    FrameReader r;
    r.feed(f);
    const auto m = r.next();
    ASSERT_TRUE(m.has_value());
    for (const auto& k : keys_of(f)) EXPECT_EQ(forbidden.count(k), 0u) << f;
    if (std::holds_alternative<VUpdate>(*m)) {
      EXPECT_EQ(keys_of(f), (std::set<std::string>{"device_id", "iteration", "v"}));
    }
    if (std::holds_alternative<Register>(*m)) {
      EXPECT_EQ(keys_of(f), (std::set<std::string>{"device_id", "a", "gamma"}));
    }
    EXPECT_EQ(f.find("quad_cubic"), std::string::npos);
  }
}

TEST(Session, ZeroDelayEstimatesMatchTheory) {
  auto p = two_device_plan();
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  const auto& st = rep.stages.at(0);
  ASSERT_EQ(st.estimates.size(), 2u);
  EXPECT_NEAR(st.estimates[0].estimated_hz, 1.0, 1e-3);
  EXPECT_NEAR(st.estimates[1].estimated_hz, 4.0, 4e-3);
  EXPECT_EQ(st.estimates[0].window_packets, 300u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(st.estimates[i].estimated_hz / st.z[i], 1.0, 1e-9);
  }
}

TEST(Session, PerPacketDelaysShiftEstimates) {
  auto p = two_device_plan();
  p.transport.links[1] = {1.6, 0.0};
  p.transport.links[2] = {4.3, 0.0};
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  const auto& e = rep.stages.at(0).estimates;
  EXPECT_NEAR(e[0].estimated_hz, 0.9984, 0.002);
  EXPECT_NEAR(e[1].estimated_hz, 3.9318, 0.002);
  EXPECT_NEAR(e[0].delay_ms, 1.6, 1e-6);
  EXPECT_NEAR(e[1].delay_ms, 4.3, 1e-6);
}

TEST(Session, JitteredDelaysAverageOut) {
  auto p = two_device_plan();
  p.transport.links[1] = {1.6, 1.0};
  p.transport.links[2] = {4.3, 2.0};
  p.transport.seed = 2024;
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  const auto& e = rep.stages.at(0).estimates;
  EXPECT_NEAR(e[0].estimated_hz, 0.9984, 0.002);
  EXPECT_NEAR(e[1].estimated_hz, 3.9318, 0.002);
}

TEST(Session, MidSessionJoinTightensStorage) {
  auto p = two_device_plan();
  p.joiners = {allocation_devices(3)[2]};
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  ASSERT_EQ(rep.stages.size(), 2u);
  const auto& before = rep.stages[0].z;
  const auto& after = rep.stages[1].z;
  EXPECT_NEAR(before[1], 4.0, 1e-3);
  EXPECT_NEAR(after[1], 8.0 / 3.0, 1e-3);
  EXPECT_NEAR(after[0], 1.0, 1e-3);
  EXPECT_NEAR(after[2], 1.0, 1e-3);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(after[i], before[i] + 1e-3);

  // Resource usage touches d and never overshoots by more than 0.5%.
  double last_storage = 0.0;
  for (const auto& s : rep.usage) {
    EXPECT_LE(s.storage, s.d * 1.005);
    EXPECT_LE(s.frequency, s.c * 1.005);
    if (s.stage == 1) last_storage = s.storage;
  }
  EXPECT_NEAR(last_storage / 15.0, 1.0, 0.005);
}

TEST(Session, JoinMatchesSolverWithAddedDevice) {
  auto p = two_device_plan();
  p.joiners = {allocation_devices(3)[2]};
  p.window = 10;
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);

  const auto fs = catalog::allocation_utilities();
  AdmmEngine engine({fs[0], fs[1]}, catalog::allocation_budget(2));
  const auto fin = rep.stages[0].final_iteration;
  std::size_t k = 0;
  for (; static_cast<std::int64_t>(k) < fin; ++k) ASSERT_EQ(engine.step(), rep.trace[k]);
  engine.add_device(fs[2], 5.0, 1.0);
  for (; k < rep.trace.size(); ++k) ASSERT_EQ(engine.step(), rep.trace[k]) << k;
}

TEST(Session, ReconfigureWhileConvergedResumes) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  cfg.expected_devices = 2;
  GatewayNode gw(cfg);
  SimNetwork net(gw, {});
  const auto devs = allocation_devices(2);
  DeviceNode d1(devs[0].id, devs[0].f, devs[0].a, devs[0].gamma);
  DeviceNode d2(devs[1].id, devs[1].f, devs[1].a, devs[1].gamma);
  net.attach(d1);
  net.attach(d2);
  ASSERT_TRUE(net.run_until([&] { return gw.phase() == GatewayPhase::Converged; }, 10.0));
  Reconfigure shrink;
  shrink.delta_d = -5.0;
  net.inject(shrink);
  EXPECT_EQ(gw.phase(), GatewayPhase::Iterating);
  ASSERT_TRUE(net.run_until([&] { return gw.phase() == GatewayPhase::Converged; }, 20.0));
  EXPECT_EQ(gw.budget().d, 10.0);
  // 2 x1 + 3 x2 <= 10 with x1 held at 1 leaves x2 = 8/3.
  EXPECT_NEAR(gw.z()[0], 1.0, 1e-3);
  EXPECT_NEAR(gw.z()[1], 8.0 / 3.0, 1e-3);
}

TEST(Session, RowTapSeesEveryRoundInOrder) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  cfg.expected_devices = 2;
  GatewayNode gw(cfg);
  auto tap = std::make_shared<RowTap>();
  gw.attach(tap);
  SimNetwork net(gw, {});
  const auto devs = allocation_devices(2);
  DeviceNode d1(devs[0].id, devs[0].f, devs[0].a, devs[0].gamma);
  DeviceNode d2(devs[1].id, devs[1].f, devs[1].a, devs[1].gamma);
  net.attach(d1);
  net.attach(d2);
  net.run_until([&] { return gw.phase() == GatewayPhase::Converged; }, 10.0);
  const auto rows = tap->drain();
  EXPECT_EQ(rows, gw.trace());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].iteration, static_cast<std::int64_t>(i + 1));
}

TEST(Session, FailingDeviceIsAbortedAndLogged) {
  GatewayConfig cfg;
  cfg.c = 20;
  cfg.d = 60;
  cfg.expected_devices = 2;
  GatewayNode gw(cfg);
  SimNetwork net(gw, {});
  // A negative cubic term makes h unbounded above: the local update fails.
  DeviceNode bad(1, UtilityFunction::quad_cubic(1.0, 0.0, -1.0, 0.0), 2.0, 1.0);
  DeviceNode good(2, catalog::allocation_utilities()[1], 3.0, 1.0);
  net.attach(bad);
  net.attach(good);
  net.run_for(1.0);
  bool aborted = false;
  for (const auto& e : net.log()) aborted |= e.kind == "device_aborted";
  bool stalled = false;
  for (const auto& e : gw.log()) stalled |= e.kind == "stall";
  EXPECT_TRUE(aborted);
  EXPECT_TRUE(stalled);
  EXPECT_EQ(gw.rounds(), 0u);
  EXPECT_EQ(bad.log().back().kind, "x_update_failed");
}

TEST(Socket, SessionConvergesWithSolverTrajectory) {
  auto p = two_device_plan();
  p.window = 40;
  p.transport.mode = TransportMode::Socket;
  p.transport.time_compression = 200.0;
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  auto sim = p;
  sim.transport.mode = TransportMode::Simulated;
  const auto ref = run_session(sim);
  EXPECT_EQ(rep.trace, ref.trace);
  const auto& e = rep.stages.at(0).estimates;
  ASSERT_EQ(e.size(), 2u);
  EXPECT_NEAR(e[0].estimated_hz, 1.0, 0.03);
  EXPECT_NEAR(e[1].estimated_hz, 4.0, 0.12);
}

TEST(Socket, MidSessionJoin) {
  auto p = two_device_plan();
  p.joiners = {allocation_devices(3)[2]};
  p.window = 20;
  p.transport.mode = TransportMode::Socket;
  p.transport.time_compression = 200.0;
  const auto rep = run_session(p);
  ASSERT_TRUE(rep.completed);
  ASSERT_EQ(rep.stages.size(), 2u);
  EXPECT_NEAR(rep.stages[1].z[1], 8.0 / 3.0, 1e-3);
  EXPECT_NEAR(rep.stages[1].z[0], 1.0, 1e-3);
}

TEST(Socket, BindFailureIsReported) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  GatewayNode a(cfg);
  GatewayNode b(cfg);
  SocketGateway first(a, {});
  EXPECT_THROW(SocketGateway(b, {}, "127.0.0.1", first.port()), TransportError);
  EXPECT_THROW(SocketGateway(b, {}, "not-an-ip", 0), TransportError);
}

TEST(Socket, DeviceGivesUpWithoutGateway) {
  std::uint16_t port = 0;
  {
    GatewayConfig cfg;
    cfg.c = 10;
    cfg.d = 15;
    GatewayNode g(cfg);
    SocketGateway tmp(g, {});
    port = tmp.port();
  }
  DeviceNode node(1, catalog::allocation_utilities()[0], 2.0, 1.0);
  SocketDevice dev(node, {}, "127.0.0.1", port);
  EXPECT_THROW(dev.run(3), TransportError);
  EXPECT_EQ(dev.log().back().kind, "connect_failed");
}

TEST(Socket, DuplicateDeviceConnectionIsDropped) {
  GatewayConfig cfg;
  cfg.c = 10;
  cfg.d = 15;
  cfg.expected_devices = 2;
  GatewayNode gw(cfg);
  TransportProfile prof;
  prof.mode = TransportMode::Socket;
  SocketGateway server(gw, prof);
  const auto fs = catalog::allocation_utilities();
  DeviceNode first(1, fs[0], 2.0, 1.0);
  DeviceNode dup(1, fs[1], 3.0, 1.0);
  SocketDevice l1(first, prof, "127.0.0.1", server.port());
  SocketDevice l2(dup, prof, "127.0.0.1", server.port());
  std::thread t1([&] { l1.run(); });
  std::thread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::thread t2([&] { l2.run(); });
    t2.join();
    server.stop();
  });
  server.serve([] { return false; });
  stopper.join();
  l1.stop();
  t1.join();
  bool rejected = false;
  for (const auto& e : gw.log()) rejected |= e.kind == "registration_rejected";
  EXPECT_TRUE(rejected);
  EXPECT_EQ(gw.devices().size(), 1u);
  EXPECT_EQ(l2.log().back().kind, "session_closed");
}
