#pragma once

#include <stdexcept>
#include <string>

namespace bgkmc {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's domain.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// A cell ended up with non-positive density or temperature.
class DegenerateState : public Error
{
public:
    DegenerateState(const std::string& what, int cell = -1)
        : Error(what)
        , cell_(cell)
    {
    }

    int cell() const noexcept { return cell_; }

private:
    int cell_;
};

/// Newton iteration did not reach tolerance.
class ConvergenceFailure : public Error
{
public:
    ConvergenceFailure(const std::string& what, double residual)
        : Error(what)
        , residual_(residual)
    {
    }

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Diffusive wall has no outgoing flux to balance.
class DegenerateWall : public Error
{
public:
    using Error::Error;
};

/// Input the exact Riemann solver cannot handle (vacuum generation).
class UnsupportedInput : public Error
{
public:
    using Error::Error;
};

/// A sample solve failed; carries the (level, sample, replication) it belonged to.
class SampleFailure : public Error
{
public:
    SampleFailure(const std::string& what, int level, long sample, int replication)
        : Error(what)
        , level_(level)
        , sample_(sample)
        , replication_(replication)
    {
    }

    int level() const noexcept { return level_; }
    long sample() const noexcept { return sample_; }
    int replication() const noexcept { return replication_; }

private:
    int level_;
    long sample_;
    int replication_;
};

} // namespace bgkmc
