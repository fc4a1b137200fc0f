#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ramdepth/config.hpp"
#include "ramdepth/errors.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorStorage {
  Shape shape;
  std::vector<real> data;
  std::vector<real> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
  bool recorded = false;   // produced by an op on a tape (not a leaf)
};

// Reference-counted handle to an n-dimensional row-major array. Copies of a
// Tensor alias the same storage; values are never changed by ops, only by
// explicit parameter updates through mutable_data().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> data, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const;
  std::int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(shape().size()); }
  std::int64_t numel() const;

  std::span<const real> data() const;
  std::span<real> mutable_data();
  real at(std::initializer_list<std::int64_t> index) const;
  real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const real> grad() const;
  std::span<real> mutable_grad();  // allocates zeros if needed
  void zero_grad();

  // Same values, no history, no gradient tracking.
  Tensor detach() const;
  Tensor clone() const;

  const TensorStorage* id() const { return storage_.get(); }
  const std::shared_ptr<TensorStorage>& storage() const { return storage_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage> storage) : storage_(std::move(storage)) {}
  friend Tensor make_tensor(std::shared_ptr<TensorStorage>);

  std::shared_ptr<TensorStorage> storage_;
};

Tensor make_tensor(std::shared_ptr<TensorStorage> storage);

// Ordered record of differentiable operations. Ops append while a
// TapeScope is active on the current thread; backward() walks the records
// in exact reverse order.
class Tape {
 public:
  struct Record {
    std::string op;
    std::vector<std::shared_ptr<TensorStorage>> inputs;
    std::shared_ptr<TensorStorage> output;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

  void push(Record record);

 private:
  std::vector<Record> records_;
};

// Makes `tape` the recording target for ops on this thread until destroyed.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// True when an op with these inputs must be recorded.
bool needs_grad(std::initializer_list<const Tensor*> inputs);
bool needs_grad(std::span<const Tensor> inputs);

// Registers `output` as produced from `inputs`. `backward` is invoked with
// the output gradient and must accumulate into inputs through
// accumulate_grad(). No-op when no input requires grad or no tape is active.
using BackwardFn = std::function<void(std::span<const real> grad_out)>;
void record_op(const char* name, const Tensor& output, std::vector<Tensor> inputs,
               BackwardFn backward);

// grad(input) += delta; ignored for inputs that do not require grad.
void accumulate_grad(const Tensor& input, std::span<const real> delta);
// Direct access to an input gradient buffer for in-place accumulation;
// returns an empty span when the input does not require grad.
std::span<real> grad_buffer(const Tensor& input);

// Reverse-mode sweep from a scalar loss. Intermediate gradients are reset
// first, leaf gradients accumulate. Every requires_grad leaf that appears
// on the tape ends up with a (possibly zero) gradient buffer.
void backward(const Tensor& loss, Tape& tape);

void check_finite(const Tensor& t, const char* what);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
