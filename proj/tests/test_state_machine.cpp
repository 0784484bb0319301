#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cpmspec/state_machine.hpp"
#include "cpmspec/welch.hpp"

using namespace cpmspec;

namespace {

CpmFormat quaternary_multih(std::vector<double> q = {}) {
  return CpmFormat::make(4, PhaseKind::Lrec, 1,
                         {{1, 4}, {5, 16}, {1, 2}, {5, 8}}, std::move(q));
}

// TPM with states reordered even-z first; q-values as entries
CMat parity_reordered(const CMat& pi, const StateCodec& codec) {
  std::vector<std::size_t> order;
  for (int par = 0; par < 2; ++par)
    for (std::size_t f = 0; f < codec.state_count(); ++f)
      if (codec.decode(f).z % 2 == par) order.push_back(f);
  CMat out(pi.rows(), pi.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < order.size(); ++j)
      out(i, j) = pi(order[i], order[j]);
  return out;
}

}  // namespace

TEST_CASE("state update arithmetic") {
  // z' = (z + r * oldest) mod 2p with the window shifted
  const CpmFormat fmt =
      CpmFormat::make(2, PhaseKind::Lrec, 2, {{5, 8}});  // p = 8, r = 5
  SmState s;
  s.z = 3;
  s.recent = {-1};
  const SmState next = state_update(fmt, s, +1, 1);
  CHECK(next.z == 14);  // (3 - 5) mod 16
  CHECK(next.recent == std::vector<int>{+1});

  const CpmFormat msk = CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}});
  SmState t;
  t.z = 0;
  CHECK(state_update(msk, t, +1, 0).z == 1);
  CHECK_THROWS_AS(state_update(msk, t, 2, 0), std::invalid_argument);
}

TEST_CASE("state codec round trip") {
  const StateCodec codec(8, 4, 3);
  CHECK(codec.state_count() == 2 * 8 * 16);
  for (std::size_t f = 0; f < codec.state_count(); f += 7)
    CHECK(codec.encode(codec.decode(f)) == f);
}

TEST_CASE("output words") {
  const CpmFormat fmt = CpmFormat::make(4, PhaseKind::Lrec, 1, {{1, 2}});
  SmState s;
  s.z = 0;
  const OutputWord w = output_word(fmt, s, +1);
  CHECK(w.length == 4);
  CHECK(w.index == 2);  // (-3,-1,+1,+3) ordering
  CHECK(w.zexp == 0);
  const CVec dense = w.dense(4);
  CHECK(dense[2] == cd(1.0, 0.0));

  s.z = 1;  // p = 2 so the unit is the quarter turn
  const OutputWord w2 = output_word(fmt, s, -3);
  CHECK(w2.index == 0);
  const CVec dense2 = w2.dense(4);
  CHECK(std::abs(dense2[0] - cd(0.0, 1.0)) <= 1e-15);
}

TEST_CASE("output word position is the mixed-radix code") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrec, 2, {{1, 2}});
  const StateCodec codec(fmt.indices.p, 2, 2);
  for (std::size_t f = 0; f < codec.state_count(); ++f) {
    const SmState s = codec.decode(f);
    for (int a : {-1, +1}) {
      const OutputWord w = output_word(fmt, s, a);
      const std::size_t expect =
          static_cast<std::size_t>(fmt.symbol_index(s.recent[0])) * 2 +
          static_cast<std::size_t>(fmt.symbol_index(a));
      CHECK(w.index == expect);
      CHECK(w.zexp == s.z);
    }
  }
}

TEST_CASE("conditional matrices, full-response case") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}});
  // e_{+1} is the single-step shift
  CHECK(conditional_matrix(fmt, +1, 0) == cyclic_shift_power(4, 1));
  CHECK(conditional_matrix(fmt, -1, 0) == cyclic_shift_power(4, -1));
}

TEST_CASE("conditional matrices match state enumeration") {
  for (const CpmFormat& fmt :
       {quaternary_multih(),
        CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}}),
        CpmFormat::make(4, PhaseKind::Lrec, 3, {{1, 4}})}) {
    for (int n = 0; n < fmt.indices.period(); ++n)
      for (int ai = 0; ai < fmt.alphabet_size(); ++ai) {
        const int a = fmt.symbol_at(ai);
        CHECK(conditional_matrix(fmt, a, n) ==
              conditional_matrix_enumerated(fmt, a, n));
      }
  }
}

TEST_CASE("every conditional matrix has one unit entry per column") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}});
  for (int n = 0; n < 2; ++n)
    for (int a : {-1, +1}) {
      const CMat e = conditional_matrix(fmt, a, n);
      for (std::size_t j = 0; j < e.cols(); ++j) {
        int ones = 0;
        for (std::size_t i = 0; i < e.rows(); ++i) {
          if (e(i, j) == cd(1.0, 0.0)) ++ones;
          else CHECK(e(i, j) == cd(0.0, 0.0));
        }
        CHECK(ones == 1);
      }
    }
}

TEST_CASE("tpm definitions coincide bit-exactly") {
  for (const CpmFormat& fmt :
       {quaternary_multih(), quaternary_multih({0.1, 0.2, 0.3, 0.4}),
        CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}}),
        CpmFormat::make(2, PhaseKind::Gmsk, 4, {{1, 2}})}) {
    for (int n = 0; n < fmt.indices.period(); ++n)
      CHECK(tpm(fmt, n) == tpm_kron(fmt, n));
  }
}

TEST_CASE("tpm period") {
  const CpmFormat fmt = quaternary_multih();
  for (int n = 0; n < 4; ++n) CHECK(tpm(fmt, n) == tpm(fmt, n + 4));
}

TEST_CASE("printed antidiagonal table, r = 3, p = 4, binary") {
  // h-list {3/4, 1/2} gives common denominator 4 with r = {3, 2}
  const double qm = 0.25, qp = 0.75;
  const CpmFormat fmt =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{3, 4}, {1, 2}}, {qm, qp});
  const StateCodec codec(4, 2, 1);
  const CMat t0 = parity_reordered(tpm(fmt, 0), codec);

  // upper-right block rows (0,2,4,6) x cols (1,3,5,7)
  const double ur[4][4] = {{0, qm, qp, 0},
                           {0, 0, qm, qp},
                           {qp, 0, 0, qm},
                           {qm, qp, 0, 0}};
  // lower-left block rows (1,3,5,7) x cols (0,2,4,6)
  const double ll[4][4] = {{0, 0, qm, qp},
                           {qp, 0, 0, qm},
                           {qm, qp, 0, 0},
                           {0, qm, qp, 0}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(t0(i, j) == cd(0.0, 0.0));
      CHECK(t0(i + 4, j + 4) == cd(0.0, 0.0));
      CHECK(t0(i, j + 4) == cd(ur[i][j], 0.0));
      CHECK(t0(i + 4, j) == cd(ll[i][j], 0.0));
    }
}

TEST_CASE("printed block-diagonal table, r = 2, p = 4, binary") {
  const double qm = 0.25, qp = 0.75;
  const CpmFormat fmt =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{3, 4}, {1, 2}}, {qm, qp});
  const StateCodec codec(4, 2, 1);
  const CMat t1 = parity_reordered(tpm(fmt, 1), codec);  // r_1 = 2

  const double blk[4][4] = {{0, qm, 0, qp},
                            {qp, 0, qm, 0},
                            {0, qp, 0, qm},
                            {qm, 0, qp, 0}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(t1(i, j) == cd(blk[i][j], 0.0));
      CHECK(t1(i + 4, j + 4) == cd(blk[i][j], 0.0));
      CHECK(t1(i, j + 4) == cd(0.0, 0.0));
      CHECK(t1(i + 4, j) == cd(0.0, 0.0));
    }
}

TEST_CASE("tpm columns sum to one exactly") {
  SplitMix64 rng(77);
  std::vector<double> q(4);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    q[static_cast<std::size_t>(i)] = rng.uniform() / 4.0;
    acc += q[static_cast<std::size_t>(i)];
  }
  q[3] = 1.0 - acc;
  const CpmFormat fmt = quaternary_multih(q);
  for (int n = 0; n < 4; ++n) {
    const CMat pi = tpm(fmt, n);
    for (std::size_t j = 0; j < pi.cols(); ++j) {
      cd sum = 0.0;
      for (std::size_t i = 0; i < pi.rows(); ++i) sum += pi(i, j);
      CHECK(sum == cd(1.0, 0.0));
    }
  }
}

TEST_CASE("invariant probability vector") {
  const CpmFormat msk = CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}});
  const CVec p = invariant_apv(msk);
  REQUIRE(p.size() == 4);
  for (const cd& v : p) CHECK(v == cd(0.25, 0.0));

  const CpmFormat two = CpmFormat::make(2, PhaseKind::Lrec, 2, {{1, 2}},
                                        {0.3, 0.7});
  const CVec p2 = invariant_apv(two);
  REQUIRE(p2.size() == 8);
  for (std::size_t i = 0; i < 8; i += 2) {
    CHECK(p2[i] == cd(0.25 * 0.3, 0.0));
    CHECK(p2[i + 1] == cd(0.25 * 0.7, 0.0));
  }

  // fixed point of every tpm for the quaternary multi-h set
  const CpmFormat fmt = quaternary_multih();
  const CVec apv = invariant_apv(fmt);
  for (int n = 0; n < 4; ++n) {
    const CVec next = matvec(tpm(fmt, n), apv);
    double worst = 0.0;
    for (std::size_t i = 0; i < apv.size(); ++i)
      worst = std::max(worst, std::abs(next[i] - apv[i]));
    CHECK(worst <= 1e-14);
  }
}

TEST_CASE("machine build and debug dump") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrec, 1, {{3, 4}, {1, 2}});
  const PtiMachine mach = PtiMachine::build(fmt);
  CHECK(mach.tpms.size() == 2);
  CHECK(mach.cond.size() == 2);
  CHECK(mach.codec.state_count() == 8);
  std::ostringstream os;
  dump_tpm_parity_ordered(mach.tpms[0], mach.codec, os);
  CHECK(os.str().find("z0") != std::string::npos);
}
