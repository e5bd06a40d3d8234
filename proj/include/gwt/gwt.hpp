#ifndef GWT_GWT_HPP_
#define GWT_GWT_HPP_

#include "gwt/measures.hpp"
#include "gwt/sinkhorn.hpp"
#include "gwt/gw.hpp"
#include "gwt/transfer.hpp"
#include "gwt/experiments.hpp"
#include "gwt/io.hpp"

#endif  // GWT_GWT_HPP_
