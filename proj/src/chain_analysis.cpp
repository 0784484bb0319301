#include "cpmspec/chain_analysis.hpp"

#include <cmath>
#include <deque>

namespace cpmspec {

ParityPartition ParityPartition::make(const StateCodec& codec) {
  ParityPartition part;
  part.half = codec.state_count() / 2;
  part.even_states.reserve(part.half);
  part.odd_states.reserve(part.half);
  const std::size_t tails = codec.tail_count();
  const long long p = codec.two_p() / 2;
  for (long long zh = 0; zh < p; ++zh)
    for (std::size_t tail = 0; tail < tails; ++tail) {
      part.even_states.push_back(static_cast<std::size_t>(2 * zh) * tails + tail);
      part.odd_states.push_back(static_cast<std::size_t>(2 * zh + 1) * tails + tail);
    }
  return part;
}

std::pair<int, std::size_t> ParityPartition::locate(const StateCodec& codec,
                                                    std::size_t flat) const {
  const std::size_t tails = codec.tail_count();
  const std::size_t z = flat / tails;
  const std::size_t tail = flat % tails;
  const int side = static_cast<int>(z % 2);
  return {side, (z / 2) * tails + tail};
}

int cyclo_period(const ModulationIndexSet& indices) {
  int odd = 0;
  for (long long r : indices.r)
    if (r % 2 != 0) ++odd;
  return (odd % 2 == 0) ? indices.period() : 2 * indices.period();
}

CMat shift_rows(const CMat& g, std::size_t tails) {
  const std::size_t n = g.rows();
  CMat out(n, g.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = (i + n - (tails % n)) % n;
    for (std::size_t j = 0; j < g.cols(); ++j) out(i, j) = g(src, j);
  }
  return out;
}

BlockSplit block_split(const CMat& tpm, const ParityPartition& parity,
                       const StateCodec& codec, long long r) {
  const std::size_t h = parity.half;
  const bool odd = (r % 2) != 0;
  auto sub = [&](const std::vector<std::size_t>& rows,
                 const std::vector<std::size_t>& cols) {
    CMat b(h, h);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) b(i, j) = tpm(rows[i], cols[j]);
    return b;
  };
  auto expect_zero = [&](const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols,
                         const char* which) {
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j)
        if (tpm(rows[i], cols[j]) != cd(0.0, 0.0))
          throw StructureViolation(std::string("nonzero entry in ") + which +
                                   " block for r=" + std::to_string(r));
  };
  if (!odd) {
    expect_zero(parity.even_states, parity.odd_states, "even-odd");
    expect_zero(parity.odd_states, parity.even_states, "odd-even");
    CMat f = sub(parity.even_states, parity.even_states);
    const CMat f2 = sub(parity.odd_states, parity.odd_states);
    if (!(f == f2))
      throw StructureViolation("diagonal parity blocks differ for even r");
    return {std::move(f), false};
  }
  expect_zero(parity.even_states, parity.even_states, "even-even");
  expect_zero(parity.odd_states, parity.odd_states, "odd-odd");
  CMat g = sub(parity.odd_states, parity.even_states);
  const CMat ur = sub(parity.even_states, parity.odd_states);
  if (!(ur == shift_rows(g, codec.tail_count())))
    throw StructureViolation("upper-right block is not the shifted copy of G");
  return {std::move(g), true};
}

TrajectoryChain trajectory_tpms(const PtiMachine& machine,
                                const ParityPartition& parity, int sign) {
  const CpmFormat& fmt = machine.format;
  const int nh = fmt.indices.period();
  const int nc = cyclo_period(fmt.indices);
  const int l = fmt.memory();
  TrajectoryChain chain;
  chain.sign = sign;
  chain.period = nc;
  int side = (sign > 0) ? 0 : 1;
  for (int n = 0; n < nc; ++n) {
    const int idx = n % nh;
    const long long r = fmt.indices.r_at(n - l + 1);
    BlockSplit split = block_split(machine.tpms[static_cast<std::size_t>(idx)],
                                   parity, machine.codec, r);
    if (!split.cross) {
      chain.steps.push_back({StepKind::Stay, idx});
      chain.tpms.push_back(std::move(split.block));
    } else if (side == 0) {
      chain.steps.push_back({StepKind::Cross, idx});
      chain.tpms.push_back(std::move(split.block));
      side = 1;
    } else {
      chain.steps.push_back({StepKind::CrossShifted, idx});
      chain.tpms.push_back(shift_rows(split.block, machine.codec.tail_count()));
      side = 0;
    }
  }
  if (side != ((sign > 0) ? 0 : 1))
    throw ClassificationFailure("trajectory does not return to its class");
  return chain;
}

CVec stationary_closed_form(const CpmFormat& format) {
  const StateCodec codec(format.indices.p, format.alphabet_size(),
                         format.memory());
  const std::size_t tails = codec.tail_count();
  const std::size_t half =
      static_cast<std::size_t>(format.indices.p) * tails;
  CVec p(half);
  for (std::size_t b = 0; b < half; ++b) {
    double v = 1.0 / static_cast<double>(format.indices.p);
    for (int a : codec.tail_at(b % tails)) v *= format.prob_of(a);
    p[b] = cd(v, 0.0);
  }
  return p;
}

int PolyphaseMachine::word_symbol(std::size_t word, int k) const {
  return pti.format.symbol_at(static_cast<int>(word_digit(word, k)));
}

std::size_t PolyphaseMachine::word_digit(std::size_t word, int k) const {
  const std::size_t m = static_cast<std::size_t>(pti.format.alphabet_size());
  std::size_t div = 1;
  for (int i = block_len - 1 - k; i > 0; --i) div *= m;
  return (word / div) % m;
}

double PolyphaseMachine::word_prob(std::size_t word) const {
  double v = 1.0;
  for (int k = 0; k < block_len; ++k)
    v *= pti.format.symbol_probs[word_digit(word, k)];
  return v;
}

double PolyphaseMachine::row_prob(std::size_t row) const {
  const std::size_t m = static_cast<std::size_t>(pti.format.alphabet_size());
  const int digits = block_len + pti.format.memory() - 1;
  // most-significant digit first, matching Kronecker-power entry products
  double v = 1.0;
  std::size_t div = 1;
  for (int i = 0; i < digits - 1; ++i) div *= m;
  for (int i = 0; i < digits; ++i) {
    v *= pti.format.symbol_probs[(row / div) % m];
    div /= m;
    if (div == 0) break;
  }
  return v;
}

long long PolyphaseMachine::state_zexp(std::size_t j, int sign) const {
  const long long zh = static_cast<long long>(j / pti.codec.tail_count());
  return (sign > 0) ? 2 * zh : 2 * zh + 1;
}

PolyphaseMachine::YEntry PolyphaseMachine::output_entry(std::size_t word,
                                                        std::size_t j,
                                                        int sign) const {
  const std::size_t tail = j % pti.codec.tail_count();
  return {tail * words + word, state_zexp(j, sign)};
}

CMat PolyphaseMachine::output_matrix_dense(std::size_t word, int sign) const {
  CMat y(out_rows, half);
  for (std::size_t j = 0; j < half; ++j) {
    const YEntry e = output_entry(word, j, sign);
    y(e.row, j) = roots[static_cast<std::size_t>(e.zexp)];
  }
  return y;
}

CMat PolyphaseMachine::conditional_dense(std::size_t word, int sign) const {
  const auto& target = (sign > 0) ? target_plus : target_minus;
  CMat e(half, half);
  for (std::size_t j = 0; j < half; ++j)
    e(target[word * half + j], j) = cd(1.0, 0.0);
  return e;
}

CMat PolyphaseMachine::full_block_tpm() const {
  CMat p = CMat::identity(pti.codec.state_count());
  const int nh = pti.format.indices.period();
  for (int n = 0; n < block_len; ++n)
    p = matmul(pti.tpms[static_cast<std::size_t>(n % nh)], p);
  return p;
}

namespace {

void check_irreducible(const CMat& pi) {
  const std::size_t n = pi.rows();
  auto reach = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        const cd w = forward ? pi(v, u) : pi(u, v);
        if (w != cd(0.0, 0.0) && !seen[v]) {
          seen[v] = 1;
          ++count;
          queue.push_back(v);
        }
      }
    }
    return count == n;
  };
  if (!reach(true) || !reach(false))
    throw ClassificationFailure("half-chain transition matrix is reducible");
}

}  // namespace

PolyphaseMachine build_polyphase(const CpmFormat& format, int anchor_offset) {
  const CpmFormat fmt = (anchor_offset == 0)
                            ? format
                            : format.with_rotated_indices(anchor_offset);
  PolyphaseMachine mach{PtiMachine::build(fmt)};
  mach.parity = ParityPartition::make(mach.pti.codec);
  mach.block_len = cyclo_period(fmt.indices);
  mach.half = mach.parity.half;
  mach.words = 1;
  for (int k = 0; k < mach.block_len; ++k)
    mach.words *= static_cast<std::size_t>(fmt.alphabet_size());
  mach.out_rows = mach.words * mach.pti.codec.tail_count();

  const long long two_p = mach.pti.codec.two_p();
  mach.roots.resize(static_cast<std::size_t>(two_p));
  for (long long k = 0; k < two_p; ++k) {
    const double ang = 2.0 * M_PI * static_cast<double>(k) /
                       static_cast<double>(two_p);
    mach.roots[static_cast<std::size_t>(k)] = cd(std::cos(ang), std::sin(ang));
  }

  mach.chain_plus = trajectory_tpms(mach.pti, mach.parity, +1);
  mach.chain_minus = trajectory_tpms(mach.pti, mach.parity, -1);
  auto product = [&](const TrajectoryChain& chain) {
    CMat p = CMat::identity(mach.half);
    for (const CMat& t : chain.tpms) p = matmul(t, p);
    return p;
  };
  mach.big_tpm_plus = product(mach.chain_plus);
  mach.big_tpm_minus = product(mach.chain_minus);
  if (max_abs_diff(mach.big_tpm_plus, mach.big_tpm_minus) > 1e-14)
    throw ClassificationFailure("parity half-chains disagree");

  mach.stationary = stationary_closed_form(fmt);
  CVec res = matvec(mach.big_tpm_plus, mach.stationary);
  double fix = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i)
    fix = std::max(fix, std::abs(res[i] - mach.stationary[i]));
  if (fix > 1e-12)
    throw ClassificationFailure("stationary vector is not a fixed point");
  check_irreducible(mach.big_tpm_plus);

  mach.limit = CMat(mach.half, mach.half);
  for (std::size_t i = 0; i < mach.half; ++i)
    for (std::size_t j = 0; j < mach.half; ++j)
      mach.limit(i, j) = mach.stationary[i];

  // per-step symbol-conditioned state maps, then word maps by composition
  const std::size_t count = mach.pti.codec.state_count();
  const int m = fmt.alphabet_size();
  std::vector<std::vector<std::vector<std::uint32_t>>> step(
      static_cast<std::size_t>(mach.block_len));
  for (int k = 0; k < mach.block_len; ++k) {
    step[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(m),
                                             std::vector<std::uint32_t>(count));
    for (int ai = 0; ai < m; ++ai)
      for (std::size_t f = 0; f < count; ++f)
        step[static_cast<std::size_t>(k)][static_cast<std::size_t>(ai)][f] =
            static_cast<std::uint32_t>(mach.pti.codec.encode(state_update(
                fmt, mach.pti.codec.decode(f), fmt.symbol_at(ai), k)));
  }
  mach.target_plus.resize(mach.words * mach.half);
  mach.target_minus.resize(mach.words * mach.half);
  for (std::size_t x = 0; x < mach.words; ++x) {
    std::vector<std::size_t> digits(static_cast<std::size_t>(mach.block_len));
    for (int k = 0; k < mach.block_len; ++k)
      digits[static_cast<std::size_t>(k)] = mach.word_digit(x, k);
    for (int sign : {+1, -1}) {
      const auto& start =
          (sign > 0) ? mach.parity.even_states : mach.parity.odd_states;
      auto& target = (sign > 0) ? mach.target_plus : mach.target_minus;
      for (std::size_t j = 0; j < mach.half; ++j) {
        std::uint32_t cur = static_cast<std::uint32_t>(start[j]);
        for (int k = 0; k < mach.block_len; ++k)
          cur = step[static_cast<std::size_t>(k)]
                    [digits[static_cast<std::size_t>(k)]][cur];
        const auto [side, idx] = mach.parity.locate(mach.pti.codec, cur);
        if (side != ((sign > 0) ? 0 : 1))
          throw ClassificationFailure("block step left the parity class");
        target[x * mach.half + j] = static_cast<std::uint32_t>(idx);
      }
    }
  }
  return mach;
}

}  // namespace cpmspec
