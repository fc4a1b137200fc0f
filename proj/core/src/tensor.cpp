#include "ramdepth/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ramdepth::inline RAMDEPTH_PRECISION {

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor make_tensor(std::shared_ptr<TensorStorage> storage) { return Tensor(std::move(storage)); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), real(0), requires_grad);
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  auto s = std::make_shared<TensorStorage>();
  s->data.assign(static_cast<std::size_t>(shape_numel(shape)), value);
  s->shape = std::move(shape);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::from_data(Shape shape, std::vector<real> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("from_data: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  auto s = std::make_shared<TensorStorage>();
  s->shape = std::move(shape);
  s->data = std::move(data);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!storage_) throw ShapeError("use of undefined tensor");
  return storage_->shape;
}

std::int64_t Tensor::dim(int axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(storage_ ? storage_->data.size() : 0); }

std::span<const real> Tensor::data() const {
  if (!storage_) throw ShapeError("use of undefined tensor");
  return storage_->data;
}

std::span<real> Tensor::mutable_data() {
  if (!storage_) throw ShapeError("use of undefined tensor");
  return storage_->data;
}

real Tensor::at(std::initializer_list<std::int64_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("at(): index rank mismatch for " + shape_str(s));
  std::int64_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i < 0 || i >= s[axis]) throw ShapeError("at(): index out of range for " + shape_str(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return storage_->data[static_cast<std::size_t>(flat)];
}

real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return storage_->data[0];
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!storage_) throw ShapeError("use of undefined tensor");
  storage_->requires_grad = flag;
}

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

std::span<const real> Tensor::grad() const {
  if (!storage_) throw ShapeError("use of undefined tensor");
  return storage_->grad;
}

std::span<real> Tensor::mutable_grad() {
  if (!storage_) throw ShapeError("use of undefined tensor");
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), real(0));
  return storage_->grad;
}

void Tensor::zero_grad() {
  if (storage_) std::fill(storage_->grad.begin(), storage_->grad.end(), real(0));
}

Tensor Tensor::detach() const {
  // Aliasing the buffer is safe: values are never written by ops.
  auto s = std::make_shared<TensorStorage>();
  s->shape = shape();
  s->data = storage_->data;
  return Tensor(std::move(s));
}

Tensor Tensor::clone() const {
  auto t = detach();
  t.storage_->requires_grad = storage_->requires_grad;
  return t;
}

void Tape::push(Record record) {
  if (!record.output) throw ShapeError("tape record without output");
  records_.push_back(std::move(record));
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!g_active_tape) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t && t->defined() && t->requires_grad(); });
}

bool needs_grad(std::span<const Tensor> inputs) {
  if (!g_active_tape) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

void record_op(const char* name, const Tensor& output, std::vector<Tensor> inputs,
               BackwardFn backward) {
  Tape* tape = g_active_tape;
  if (!tape || !needs_grad(std::span<const Tensor>(inputs))) return;
  auto out = output.storage();
  out->requires_grad = true;
  out->recorded = true;
  Tape::Record rec;
  rec.op = name;
  rec.output = out;
  rec.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.defined()) rec.inputs.push_back(in.storage());
  }
  TensorStorage* out_raw = out.get();
  rec.backward = [out_raw, fn = std::move(backward)]() {
    if (out_raw->grad.empty()) return;
    fn(out_raw->grad);
  };
  tape->push(std::move(rec));
}

void accumulate_grad(const Tensor& input, std::span<const real> delta) {
  if (!input.defined() || !input.requires_grad()) return;
  auto& g = input.storage()->grad;
  if (g.empty()) g.assign(input.storage()->data.size(), real(0));
  if (delta.size() != g.size()) throw ShapeError("accumulate_grad: size mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

std::span<real> grad_buffer(const Tensor& input) {
  if (!input.defined() || !input.requires_grad()) return {};
  auto& g = input.storage()->grad;
  if (g.empty()) g.assign(input.storage()->data.size(), real(0));
  return g;
}

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  auto& records = tape.records();
  // Reset intermediates so replaying a tape is idempotent.
  for (const auto& rec : records) {
    std::fill(rec.output->grad.begin(), rec.output->grad.end(), real(0));
  }
  for (const auto& rec : records) {
    for (const auto& in : rec.inputs) {
      if (in->requires_grad && !in->recorded && in->grad.empty()) {
        in->grad.assign(in->data.size(), real(0));
      }
    }
  }
  auto& lg = loss.storage()->grad;
  lg.assign(1, real(1));
  for (auto it = records.rbegin(); it != records.rend(); ++it) it->backward();
}

void check_finite(const Tensor& t, const char* what) {
  for (real v : t.data()) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
  }
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
