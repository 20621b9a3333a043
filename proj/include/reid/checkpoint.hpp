// Copyright 2026 The reid-contrast Authors. All Rights Reserved.
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

#ifndef REID_CHECKPOINT_HPP
#define REID_CHECKPOINT_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/encoder.hpp"
#include "reid/error.hpp"
#include "reid/trainer.hpp"

namespace reid {

// Text checkpoint of an encoder pair and its optimizer. Reals use the
// shortest round-trip representation, so a load reproduces every bit.
//
//   reid-checkpoint 1
//   activation tanh
//   shape <in> <hidden> <out>
//   alpha <a>
//   optimizer <lr> <warmup> <weight decay> <beta1> <beta2> <epsilon>
//   step <adam steps>
//   epoch <last completed epoch>
//   tensor <name> <rows> <cols>
//   <rows * cols reals on one line, row-major>
//   ...
//   end

inline constexpr std::string_view kCheckpointMagic = "reid-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainState state;
  int epoch = -1;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline const char* param_names[] = {"w1", "b1", "w2", "b2"};

template <class T>
void write_tensor(std::ostream& os, const std::string& name, const T& t) {
  os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  for (Eigen::Index i = 0; i < t.size(); ++i) os << (i ? " " : "") << format_double(t.data()[i]);
  os << '\n';
}

inline void write_params(std::ostream& os, const std::string& prefix, const ParamSet& p) {
  write_tensor(os, prefix + ".w1", p.w1);
  write_tensor(os, prefix + ".b1", p.b1);
  write_tensor(os, prefix + ".w2", p.w2);
  write_tensor(os, prefix + ".b2", p.b2);
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& is) : is_(is) {}

  std::vector<std::string> line(std::string_view expect_key) {
    require(static_cast<bool>(std::getline(is_, buf_)), Errc::ParseError,
            "checkpoint line " + std::to_string(line_no_ + 1) + ": unexpected end of file");
    ++line_no_;
    const auto views = split_ws(buf_);
    std::vector<std::string> tok(views.begin(), views.end());
    require(!tok.empty() && tok[0] == expect_key, Errc::ParseError,
            "checkpoint line " + std::to_string(line_no_) + ": expected '" + std::string(expect_key) + "'");
    return tok;
  }

  template <class T>
  T number(std::string_view tok) {
    return parse_number<T>(tok, line_no_);
  }

  template <class T>
  void tensor(const std::string& name, T& out) {
    const auto head = line("tensor");
    require(head.size() == 4 && head[1] == name, Errc::ParseError,
            "checkpoint line " + std::to_string(line_no_) + ": expected tensor " + name);
    const auto rows = number<Eigen::Index>(head[2]);
    const auto cols = number<Eigen::Index>(head[3]);
    require(rows >= 0 && cols >= 0, Errc::ParseError, "negative tensor shape");
    require(static_cast<bool>(std::getline(is_, buf_)), Errc::ParseError, "missing tensor data for " + name);
    ++line_no_;
    const auto values = split_ws(buf_);
    require(static_cast<Eigen::Index>(values.size()) == rows * cols, Errc::ParseError,
            "checkpoint line " + std::to_string(line_no_) + ": tensor " + name + " size mismatch");
    if constexpr (T::ColsAtCompileTime == 1) {
      require(cols == 1, Errc::ParseError, "tensor " + name + " must be a column");
      out.resize(rows);
    } else {
      out.resize(rows, cols);
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      out.data()[i] = number<double>(values[static_cast<std::size_t>(i)]);
    }
  }

  ParamSet params(const std::string& prefix) {
    ParamSet p;
    tensor(prefix + ".w1", p.w1);
    tensor(prefix + ".b1", p.b1);
    tensor(prefix + ".w2", p.w2);
    tensor(prefix + ".b2", p.b2);
    return p;
  }

 private:
  std::istream& is_;
  std::string buf_;
  std::size_t line_no_ = 0;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const auto& s = ck.state;
  const auto shape = s.pair.online.shape();
  const auto& o = s.optimizer.settings;
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "activation " << (s.pair.online.activation == Activation::Tanh ? "tanh" : "identity") << '\n';
  os << "shape " << shape.input << ' ' << shape.hidden << ' ' << shape.output << '\n';
  os << "alpha " << format_double(s.pair.alpha) << '\n';
  os << "optimizer " << format_double(o.base_lr) << ' ' << o.warmup_epochs << ' ' << format_double(o.weight_decay)
     << ' ' << format_double(o.beta1) << ' ' << format_double(o.beta2) << ' ' << format_double(o.epsilon) << '\n';
  os << "step " << s.optimizer.step << '\n';
  os << "epoch " << ck.epoch << '\n';
  detail::write_params(os, "online", s.pair.online.weights);
  detail::write_params(os, "momentum", s.pair.momentum.weights);
  detail::write_params(os, "adam_m", s.optimizer.first_moment);
  detail::write_params(os, "adam_v", s.optimizer.second_moment);
  os << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& is) {
  detail::CheckpointReader r(is);
  Checkpoint ck;
  auto magic = r.line(kCheckpointMagic);
  require(magic.size() == 2 && r.number<int>(magic[1]) == kCheckpointVersion, Errc::ParseError,
          "unsupported checkpoint version");
  const auto act = r.line("activation");
  require(act.size() == 2 && (act[1] == "tanh" || act[1] == "identity"), Errc::ParseError, "bad activation");
  const auto activation = act[1] == "tanh" ? Activation::Tanh : Activation::Identity;
  const auto shape_tok = r.line("shape");
  require(shape_tok.size() == 4, Errc::ParseError, "bad shape line");
  const EncoderShape shape{r.number<int>(shape_tok[1]), r.number<int>(shape_tok[2]), r.number<int>(shape_tok[3])};
  const auto alpha = r.line("alpha");
  require(alpha.size() == 2, Errc::ParseError, "bad alpha line");
  const auto opt = r.line("optimizer");
  require(opt.size() == 7, Errc::ParseError, "bad optimizer line");
  OptimizerSettings settings{r.number<double>(opt[1]), r.number<int>(opt[2]), r.number<double>(opt[3]),
                             r.number<double>(opt[4]), r.number<double>(opt[5]), r.number<double>(opt[6])};
  const auto step = r.line("step");
  require(step.size() == 2, Errc::ParseError, "bad step line");
  const auto epoch = r.line("epoch");
  require(epoch.size() == 2, Errc::ParseError, "bad epoch line");

  auto& s = ck.state;
  s.pair.alpha = r.number<double>(alpha[1]);
  s.pair.online = {r.params("online"), activation};
  s.pair.momentum = {r.params("momentum"), activation};
  s.optimizer.settings = settings;
  s.optimizer.first_moment = r.params("adam_m");
  s.optimizer.second_moment = r.params("adam_v");
  s.optimizer.step = r.number<std::int64_t>(step[1]);
  ck.epoch = r.number<int>(epoch[1]);
  r.line("end");

  for (const ParamSet* p : {&s.pair.online.weights, &s.pair.momentum.weights, &s.optimizer.first_moment,
                            &s.optimizer.second_moment}) {
    require(p->shape() == shape && p->b1.size() == shape.hidden && p->b2.size() == shape.output,
            Errc::ParseError, "tensor shapes disagree with the declared encoder shape");
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), Errc::IoError, "cannot write " + path);
  write_checkpoint(os, ck);
  require(static_cast<bool>(os), Errc::IoError, "write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), Errc::IoError, "cannot read " + path);
  return read_checkpoint(is);
}

}  // namespace reid

#endif  // REID_CHECKPOINT_HPP
