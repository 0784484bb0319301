#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpmspec/chain_analysis.hpp"
#include "cpmspec/welch.hpp"

using namespace cpmspec;

namespace {

CpmFormat quaternary_multih() {
  return CpmFormat::make(4, PhaseKind::Lrec, 1,
                         {{1, 4}, {5, 16}, {1, 2}, {5, 8}});
}

std::vector<StepKind> kinds(const TrajectoryChain& c) {
  std::vector<StepKind> out;
  for (const auto& s : c.steps) out.push_back(s.kind);
  return out;
}

}  // namespace

TEST_CASE("cyclostationarity period from index parities") {
  // r = (2,1,3): two odd -> period stays N_h
  CHECK(cyclo_period(ModulationIndexSet::normalize({{1, 2}, {1, 4}, {3, 4}})) == 3);
  // r = (2,1,2): one odd -> doubled
  CHECK(cyclo_period(ModulationIndexSet::normalize({{1, 2}, {1, 4}, {1, 2}})) == 6);
  // r = (2,1): one odd -> doubled
  CHECK(cyclo_period(ModulationIndexSet::normalize({{1, 2}, {1, 4}})) == 4);
  // single even index
  CHECK(cyclo_period(ModulationIndexSet::normalize({{2, 3}})) == 1);
  // single odd index (MSK)
  CHECK(cyclo_period(ModulationIndexSet::normalize({{1, 2}})) == 2);
  // quaternary example: r = (4,5,8,10), one odd
  CHECK(cyclo_period(quaternary_multih().indices) == 8);
}

TEST_CASE("parity partition covers the state set") {
  const StateCodec codec(8, 4, 2);
  const ParityPartition part = ParityPartition::make(codec);
  CHECK(part.half == codec.state_count() / 2);
  std::vector<char> seen(codec.state_count(), 0);
  for (std::size_t f : part.even_states) {
    CHECK(codec.decode(f).z % 2 == 0);
    seen[f] = 1;
  }
  for (std::size_t f : part.odd_states) {
    CHECK(codec.decode(f).z % 2 == 1);
    seen[f] = 1;
  }
  for (char c : seen) CHECK(c == 1);
  // locate() inverts the block order
  for (std::size_t b = 0; b < part.half; ++b) {
    CHECK(part.locate(codec, part.even_states[b]) == std::pair{0, b});
    CHECK(part.locate(codec, part.odd_states[b]) == std::pair{1, b});
  }
}

TEST_CASE("block split structure") {
  const CpmFormat fmt =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{3, 4}, {1, 2}}, {0.25, 0.75});
  const StateCodec codec(4, 2, 1);
  const ParityPartition part = ParityPartition::make(codec);

  const BlockSplit odd = block_split(tpm(fmt, 0), part, codec, 3);
  CHECK(odd.cross);
  const BlockSplit even = block_split(tpm(fmt, 1), part, codec, 2);
  CHECK(!even.cross);

  // shift correction commutes with both blocks
  const CMat d = shift_rows(CMat::identity(part.half), codec.tail_count());
  CHECK(matmul(d, even.block) == matmul(even.block, d));
  CHECK(matmul(d, odd.block) == matmul(odd.block, d));

  // feeding the wrong parity must trip the structure check
  CHECK_THROWS_AS(block_split(tpm(fmt, 0), part, codec, 2), StructureViolation);
  CHECK_THROWS_AS(block_split(tpm(fmt, 1), part, codec, 3), StructureViolation);
}

TEST_CASE("trajectory sequences for the three reference parity patterns") {
  // pattern (even, odd, odd): F0, G1, D G2 then the complementary run
  const CpmFormat h2 =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}, {1, 4}, {3, 4}});
  const PtiMachine m2 = PtiMachine::build(h2);
  const ParityPartition p2 = ParityPartition::make(m2.codec);
  const TrajectoryChain plus = trajectory_tpms(m2, p2, +1);
  CHECK(plus.period == 3);
  CHECK(kinds(plus) == std::vector<StepKind>{StepKind::Stay, StepKind::Cross,
                                             StepKind::CrossShifted});
  const TrajectoryChain minus = trajectory_tpms(m2, p2, -1);
  CHECK(kinds(minus) == std::vector<StepKind>{StepKind::Stay,
                                              StepKind::CrossShifted,
                                              StepKind::Cross});
  // the emitted matrices follow the split blocks
  const BlockSplit f0 = block_split(m2.tpms[0], p2, m2.codec, 2);
  const BlockSplit g1 = block_split(m2.tpms[1], p2, m2.codec, 1);
  const BlockSplit g2 = block_split(m2.tpms[2], p2, m2.codec, 3);
  CHECK(plus.tpms[0] == f0.block);
  CHECK(plus.tpms[1] == g1.block);
  CHECK(plus.tpms[2] == shift_rows(g2.block, m2.codec.tail_count()));
  CHECK(minus.tpms[1] == shift_rows(g1.block, m2.codec.tail_count()));
  CHECK(minus.tpms[2] == g2.block);

  // pattern (even, odd, even): period doubles to 6
  const CpmFormat h3 =
      CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}, {1, 4}, {1, 2}});
  const PtiMachine m3 = PtiMachine::build(h3);
  const ParityPartition p3 = ParityPartition::make(m3.codec);
  const TrajectoryChain t3 = trajectory_tpms(m3, p3, +1);
  CHECK(t3.period == 6);
  CHECK(kinds(t3) ==
        std::vector<StepKind>{StepKind::Stay, StepKind::Cross, StepKind::Stay,
                              StepKind::Stay, StepKind::CrossShifted,
                              StepKind::Stay});

  // pattern (even, odd): period 4
  const CpmFormat h4 = CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}, {1, 4}});
  const PtiMachine m4 = PtiMachine::build(h4);
  const ParityPartition p4 = ParityPartition::make(m4.codec);
  const TrajectoryChain t4 = trajectory_tpms(m4, p4, +1);
  CHECK(t4.period == 4);
  CHECK(kinds(t4) ==
        std::vector<StepKind>{StepKind::Stay, StepKind::Cross, StepKind::Stay,
                              StepKind::CrossShifted});

  // single even index: one direct step
  const CpmFormat he = CpmFormat::make(2, PhaseKind::Lrec, 1, {{2, 3}});
  const PtiMachine me = PtiMachine::build(he);
  const ParityPartition pe = ParityPartition::make(me.codec);
  const TrajectoryChain te = trajectory_tpms(me, pe, +1);
  CHECK(te.period == 1);
  CHECK(kinds(te) == std::vector<StepKind>{StepKind::Stay});
}

TEST_CASE("polyphase machine, degenerate single-step case") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrec, 1, {{2, 3}});
  const PolyphaseMachine mach = build_polyphase(fmt);
  CHECK(mach.block_len == 1);
  CHECK(mach.words == 2);
  const BlockSplit f0 =
      block_split(mach.pti.tpms[0], mach.parity, mach.pti.codec, 2);
  CHECK(mach.big_tpm_plus == f0.block);
  // E_alpha equals the parity block of e_alpha
  for (int ai = 0; ai < 2; ++ai) {
    const CMat e = conditional_matrix(fmt, fmt.symbol_at(ai), 0);
    const CMat eplus = mach.conditional_dense(static_cast<std::size_t>(ai), +1);
    for (std::size_t i = 0; i < mach.half; ++i)
      for (std::size_t j = 0; j < mach.half; ++j)
        CHECK(eplus(i, j) ==
              e(mach.parity.even_states[i], mach.parity.even_states[j]));
  }
}

TEST_CASE("blocked tpm equals the word-probability mixture") {
  const PolyphaseMachine mach = build_polyphase(quaternary_multih());
  CMat mix(mach.half, mach.half);
  for (std::size_t x = 0; x < mach.words; ++x) {
    const double px = mach.word_prob(x);
    for (std::size_t j = 0; j < mach.half; ++j)
      mix(mach.target_plus[x * mach.half + j], j) += px;
  }
  CHECK(max_abs_diff(mix, mach.big_tpm_plus) <= 1e-14);
}

TEST_CASE("parity halves coincide and the full blocked tpm is block diagonal") {
  for (const CpmFormat& fmt :
       {quaternary_multih(),
        CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}}),
        CpmFormat::make(2, PhaseKind::Gmsk, 4, {{1, 2}})}) {
    const PolyphaseMachine mach = build_polyphase(fmt);
    CHECK(mach.big_tpm_plus == mach.big_tpm_minus);
    CHECK(mach.target_plus == mach.target_minus);

    const CMat full = mach.full_block_tpm();
    for (std::size_t i = 0; i < mach.half; ++i)
      for (std::size_t j = 0; j < mach.half; ++j) {
        CHECK(full(mach.parity.even_states[i], mach.parity.odd_states[j]) ==
              cd(0.0, 0.0));
        CHECK(full(mach.parity.odd_states[i], mach.parity.even_states[j]) ==
              cd(0.0, 0.0));
      }
    // block extraction agrees with the trajectory product
    double worst = 0.0;
    for (std::size_t i = 0; i < mach.half; ++i)
      for (std::size_t j = 0; j < mach.half; ++j)
        worst = std::max(worst, std::abs(full(mach.parity.even_states[i],
                                              mach.parity.even_states[j]) -
                                         mach.big_tpm_plus(i, j)));
    CHECK(worst <= 1e-15);
  }
}

TEST_CASE("stationary distribution") {
  const CpmFormat msk = CpmFormat::make(2, PhaseKind::Lrec, 1, {{1, 2}});
  const PolyphaseMachine mm = build_polyphase(msk);
  REQUIRE(mm.stationary.size() == 2);
  CHECK(mm.stationary[0] == cd(0.5, 0.0));
  CHECK(mm.stationary[1] == cd(0.5, 0.0));

  const CpmFormat gmsk = CpmFormat::make(2, PhaseKind::Gmsk, 4, {{1, 2}});
  const PolyphaseMachine mg = build_polyphase(gmsk);
  REQUIRE(mg.stationary.size() == 16);
  for (std::size_t b = 0; b < 16; ++b)
    CHECK(std::abs(mg.stationary[b] - cd(1.0 / 16.0, 0.0)) == 0.0);

  // fixed point and rank-one limit
  for (const CpmFormat& fmt : {quaternary_multih(), gmsk}) {
    const PolyphaseMachine mach = build_polyphase(fmt);
    const CVec fp = matvec(mach.big_tpm_plus, mach.stationary);
    double worst = 0.0;
    for (std::size_t i = 0; i < fp.size(); ++i)
      worst = std::max(worst, std::abs(fp[i] - mach.stationary[i]));
    CHECK(worst <= 1e-14);

    const CMat p200 = matpow(mach.big_tpm_plus, 200);
    CHECK(max_abs_diff(p200, mach.limit) <= 1e-10);
    for (std::size_t j = 0; j < mach.half; ++j)
      for (std::size_t i = 0; i < mach.half; ++i)
        CHECK(mach.limit(i, j) == mach.stationary[i]);
  }
}

TEST_CASE("blocked machine matches step-by-step simulation") {
  // walking the per-symbol machine N_c steps lands on the block target
  for (const CpmFormat& fmt :
       {quaternary_multih(),
        CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}})}) {
    const PolyphaseMachine mach = build_polyphase(fmt);
    SplitMix64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t x = rng.next() % mach.words;
      const std::size_t j = rng.next() % mach.half;
      SmState s = mach.pti.codec.decode(mach.parity.even_states[j]);
      for (int k = 0; k < mach.block_len; ++k)
        s = state_update(fmt, s, mach.word_symbol(x, k), k);
      const auto [side, idx] =
          mach.parity.locate(mach.pti.codec, mach.pti.codec.encode(s));
      CHECK(side == 0);
      CHECK(idx == mach.target_plus[x * mach.half + j]);
    }
  }
}

TEST_CASE("output matrices") {
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrc, 2, {{1, 2}, {3, 4}});
  const PolyphaseMachine mach = build_polyphase(fmt);
  REQUIRE(mach.block_len == 4);

  SplitMix64 rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t x = rng.next() % mach.words;
    for (int sign : {+1, -1}) {
      const CMat y = mach.output_matrix_dense(x, sign);
      // one unit-modulus entry per column
      for (std::size_t j = 0; j < y.cols(); ++j) {
        int nonzero = 0;
        for (std::size_t i = 0; i < y.rows(); ++i)
          if (y(i, j) != cd(0.0, 0.0)) {
            ++nonzero;
            CHECK(std::abs(std::abs(y(i, j)) - 1.0) <= 1e-15);
          }
        CHECK(nonzero == 1);
      }
    }
    // odd-class matrix is the root-of-unity multiple of the even one
    for (std::size_t j = 0; j < mach.half; ++j) {
      const auto ep = mach.output_entry(x, j, +1);
      const auto em = mach.output_entry(x, j, -1);
      CHECK(ep.row == em.row);
      CHECK((ep.zexp + 1) % mach.pti.codec.two_p() ==
            em.zexp % mach.pti.codec.two_p());
    }
  }
}

TEST_CASE("output matrix equals its Kronecker form") {
  // direct per-state construction against V_p (x) I (x) w_{x0} (x) ... form
  const CpmFormat fmt = CpmFormat::make(2, PhaseKind::Lrec, 2, {{1, 2}});
  const PolyphaseMachine mach = build_polyphase(fmt);
  REQUIRE(mach.block_len == 2);
  const long long p = fmt.indices.p;
  CMat vp(1, static_cast<std::size_t>(p));
  for (long long k = 0; k < p; ++k)
    vp(0, static_cast<std::size_t>(k)) =
        mach.roots[static_cast<std::size_t>(2 * k)];
  const CMat eye = CMat::identity(mach.pti.codec.tail_count());
  for (std::size_t x = 0; x < mach.words; ++x) {
    CMat wchain = CMat::identity(1);
    for (int k = 0; k < mach.block_len; ++k) {
      CMat w(2, 1);
      w(mach.word_digit(x, k), 0) = 1.0;
      wchain = kron(wchain, w);
    }
    const CMat y_kron = kron(vp, kron(eye, wchain));
    CHECK(y_kron == mach.output_matrix_dense(x, +1));
  }
}

TEST_CASE("anchor rotation keeps the half-chain consistent") {
  const CpmFormat fmt = quaternary_multih();
  for (int off = 0; off < 4; ++off) {
    const PolyphaseMachine mach = build_polyphase(fmt, off);
    CHECK(mach.block_len == 8);
    CHECK(mach.big_tpm_plus == mach.big_tpm_minus);
  }
}
