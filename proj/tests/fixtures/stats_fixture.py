import os
import sys
def f(a, b):
    x = a + b
    return x
def g(n):
    if n > 0:
        return n
    return 0
class C:
    def m(self):
        return self
x = f(1, 2)
y = g(3)
z = [1, 2, 3]
s = "hello"
n = 42
print(x)
print(y, z)
print(s, n)
