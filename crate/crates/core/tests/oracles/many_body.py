import numpy as np, scipy.linalg as sl, sys, json
def ops(n):
    # Jordan-Wigner; basis index 1 is the occupied state.
    I=np.eye(2); Z=np.diag([1.,-1.]); a=np.array([[0,1],[0,0]],dtype=complex)
    out=[]
    for j in range(n):
        m=np.array([[1.]])
        for k in range(n):
            m=np.kron(m, Z if k<j else (a if k==j else I))
        out.append(m.astype(complex))
    return out
def run(t1,t2,gl1,gg1,gl2,gg2,N,periodic,v,times):
    n=2*N if periodic else 2*N-1
    A=ops(n); D=2**n
    ad=[x.conj().T for x in A]
    H=np.zeros((D,D),complex)
    # cell j holds sites A=2j, B=2j+1
    for j in range(N):
        pa=2*j; pb=2*j+1
        if pb<n: H+=t1*ad[pa]@A[pb]
        if pb<n:
            nxt=2*(j+1)
            if nxt<n: H+=t2*ad[nxt]@A[pb]
            elif periodic: H+=t2*ad[0]@A[pb]
    H=H+H.conj().T
    L=[]
    for j in range(N):
        pa=2*j; pb=2*j+1
        if pb<n:
            L+=[np.sqrt(gl1)*(A[pa]-1j*A[pb]), np.sqrt(gg1)*(ad[pa]+1j*ad[pb])]
            nxt=2*(j+1)
            if nxt<n or periodic:
                nx=nxt%n
                L+=[np.sqrt(gl2)*(A[pb]-1j*A[nx]), np.sqrt(gg2)*(ad[pb]+1j*ad[nx])]
        else:
            L+=[np.sqrt(gl1)*A[pa], np.sqrt(gg1)*ad[pa], -1j*np.sqrt(gl2)*A[0], 1j*np.sqrt(gg2)*ad[0]]
    Id=np.eye(D)
    # column-stacking vec: vec(AXB)=(B^T kron A) vec X
    S=-1j*(np.kron(Id,H)-np.kron(H.T,Id))
    for l in L:
        ld=l.conj().T; ll=ld@l
        S+=np.kron(l.conj(),l)-0.5*np.kron(Id,ll)-0.5*np.kron(ll.T,Id)
    # product state: occupation v_j mixed
    rho=np.array([[1.]],complex)
    for j in range(n):
        rho=np.kron(rho,np.diag([1-v[j],v[j]]))
    res=[]
    for t in times:
        r=(sl.expm(S*t)@rho.reshape(-1,order='F')).reshape(D,D,order='F')
        Q=np.array([[np.trace(ad[j]@A[k]@r) for k in range(n)] for j in range(n)])
        res.append(Q)
    return res
if __name__=="__main__":
    # usage: many_body.py '{"t1":..,"t2":..,"gl1":..,"gg1":..,"gl2":..,"gg2":..,"N":..,"periodic":..,"v":[..],"times":[..]}'
    cfg=json.loads(sys.argv[1])
    for t,Q in zip(cfg["times"],run(**cfg)):
        nn=Q.shape[0]
        cur=sum(Q[j,j+1]-Q[j+1,j] for j in range(nn-1))
        if cfg["periodic"]: cur+=Q[nn-1,0]-Q[0,nn-1]
        print(t, " ".join(repr(float(x.real)) for x in np.diag(Q)), repr(float((1j*cur/nn).real)))
