#include <stdio.h>

int main(void) {
  double x[40];
  double y[40];
  int hist[40];
  int i;

  #pragma acc data copyout(x[0:40])
  {
  #pragma acc data present(x[0:40])
  #pragma acc kernels
  for (i = 0; i < 40; i++)
    x[i] = 0.5 * (double)i;

  #pragma acc data copyout(y[0:40])
  {
  #pragma acc data present(x[0:40])
  #pragma acc kernels
  for (i = 0; i < 40; i++)
    y[i] = x[i] * x[i] + 1.0;
  }
  }

  x[7] = -3.0;
  y[0] = y[0] + x[7];

  #pragma acc data copy(y[0:40]) copyout(hist[0:40])
  {
  #pragma acc data present(hist[0:40],y[0:40])
  #pragma acc kernels
  for (i = 0; i < 40; i++)
    hist[i] = (int)y[i] % 7;

  #pragma acc data copy(x[0:40])
  {
  #pragma acc data present(x[0:40],y[0:40])
  #pragma acc parallel loop vector
  for (i = 0; i < 39; i++)
    y[i] = y[i + 1] - x[i];

  #pragma acc data present(hist[0:40],x[0:40],y[0:40])
  #pragma acc kernels
  for (i = 0; i < 40; i++)
    x[i] = y[i] + (double)hist[i];
  }
  }

  for (i = 0; i < 40; i++)
    printf("%d %.10f %.10f\n", hist[i], x[i], y[i]);
  return 0;
}
