#include "mnp/ode.hpp"

namespace mnp {

template Trajectory<double> integrate<double>(const LinearSystem<double>&, const Eigen::VectorXd&,
                                              const IntegratorConfig&, const SampleObserver<double>&);
template Trajectory<std::complex<double>> integrate<std::complex<double>>(
    const LinearSystem<std::complex<double>>&, const Eigen::VectorXcd&, const IntegratorConfig&,
    const SampleObserver<std::complex<double>>&);

}  // namespace mnp
